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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

namespace umiclab::binary {

// Little-endian primitive writers/readers shared by the feature and
// checkpoint containers. Readers throw FormatError on short reads.

void write_u16(std::ostream& out, std::uint16_t value);
void write_u32(std::ostream& out, std::uint32_t value);
void write_f32(std::ostream& out, float value);
void write_bytes(std::ostream& out, std::string_view bytes);

std::uint16_t read_u16(std::istream& in, std::string_view what);
std::uint32_t read_u32(std::istream& in, std::string_view what);
float read_f32(std::istream& in, std::string_view what);
std::string read_bytes(std::istream& in, std::size_t count, std::string_view what);
void read_f32_array(std::istream& in, std::span<float> out, std::string_view what);

// True when the stream has no bytes left.
bool at_end(std::istream& in);

}  // namespace umiclab::binary
