//
// Copyright 2026 The UMICLab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "umiclab/binary_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>

#include "umiclab/errors.hpp"

namespace umiclab::binary {
namespace {

template <typename T>
void write_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in, std::string_view what) {
  std::array<char, sizeof(T)> bytes;
  in.read(bytes.data(), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError("truncated input while reading " + std::string(what));
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_u16(std::ostream& out, std::uint16_t value) { write_le(out, value); }
void write_u32(std::ostream& out, std::uint32_t value) { write_le(out, value); }
void write_f32(std::ostream& out, float value) { write_le(out, value); }

void write_bytes(std::ostream& out, std::string_view bytes) {
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint16_t read_u16(std::istream& in, std::string_view what) {
  return read_le<std::uint16_t>(in, what);
}

std::uint32_t read_u32(std::istream& in, std::string_view what) {
  return read_le<std::uint32_t>(in, what);
}

float read_f32(std::istream& in, std::string_view what) { return read_le<float>(in, what); }

std::string read_bytes(std::istream& in, std::size_t count, std::string_view what) {
  std::string bytes(count, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(count));
  if (in.gcount() != static_cast<std::streamsize>(count)) {
    throw FormatError("truncated input while reading " + std::string(what));
  }
  return bytes;
}

void read_f32_array(std::istream& in, std::span<float> out, std::string_view what) {
  const auto byte_count = static_cast<std::streamsize>(out.size() * sizeof(float));
  in.read(reinterpret_cast<char*>(out.data()), byte_count);
  if (in.gcount() != byte_count) {
    throw FormatError("truncated input while reading " + std::string(what));
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (float& v : out) {
      std::array<char, sizeof(float)> b;
      std::memcpy(b.data(), &v, sizeof(float));
      std::reverse(b.begin(), b.end());
      std::memcpy(&v, b.data(), sizeof(float));
    }
  }
}

bool at_end(std::istream& in) {
  return in.peek() == std::char_traits<char>::eof();
}

}  // namespace umiclab::binary
