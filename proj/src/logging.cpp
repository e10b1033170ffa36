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

#include "umiclab/logging.hpp"

#include <iostream>
#include <map>
#include <mutex>

namespace umiclab {

void warn(const std::string& kind, const std::string& message) {
  static std::mutex mutex;
  static std::map<std::string, int> counts;
  constexpr int kMaxPerKind = 5;
  std::lock_guard<std::mutex> lock(mutex);
  const int n = ++counts[kind];
  if (n <= kMaxPerKind) {
    std::cerr << "umiclab: warning: " << message << '\n';
  } else if (n == kMaxPerKind + 1) {
    std::cerr << "umiclab: warning: further '" << kind << "' warnings suppressed\n";
  }
}

}  // namespace umiclab
