// Copyright 2026 The radsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RADSUM_ERROR_HPP_
#define RADSUM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace radsum {

// Base class for every domain failure raised by the library. The CLI maps
// these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A provider call that failed in a way worth retrying (connection refused,
// timeout, 5xx, 429).
class TransientError : public Error {
 public:
  using Error::Error;
};

// Prefixes the message of a caught error with some context and rethrows a
// new Error of the same category.
[[noreturn]] inline void RethrowWithContext(const std::string& context) {
  try {
    throw;
  } catch (const TransientError& e) {
    throw TransientError(context + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(context + ": " + e.what());
  }
}

}  // namespace radsum

#endif  // RADSUM_ERROR_HPP_
