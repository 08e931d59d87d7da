// Copyright 2026 The cryoctl Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cryoctl {

/// Base of every exception thrown by the library. The C API maps each
/// subclass onto one status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value outside its admissible range (e.g. a frequency beyond Nyquist).
class RangeError : public Error {
public:
    using Error::Error;
};

/// One of the controller memories (envelope, instruction table, instruction
/// list) would overflow. Never silently truncated.
class CapacityError : public Error {
public:
    CapacityError(std::string memory, std::size_t limit, const std::string& what)
        : Error(what), memory_(std::move(memory)), limit_(limit) {}
    const std::string& memory() const { return memory_; }
    std::size_t limit() const { return limit_; }

private:
    std::string memory_;
    std::size_t limit_;
};

/// Structural problem in a memory image or instruction stream discovered
/// before any sample is produced.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed program text, listing or binary image. `position` is a byte
/// offset for binary input and a 1-based line number for text input.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Invalid configuration file or configuration section.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace cryoctl
