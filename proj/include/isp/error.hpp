// Copyright (c) 2026 The twostage-isp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace isp {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input: configuration fields, shapes, tags, preconditions.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ShapeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Non-finite values where finite ones are required (gradients, losses).
class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Dataset integrity problems found while loading a manifest.
class DataError : public Error {
public:
    enum class Kind { MissingFile, ChecksumMismatch, InvariantViolation };

    DataError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Raised when training hits a non-finite loss. The checkpoint written before
// aborting is recorded so callers can report it.
class TrainingAborted : public Error {
public:
    TrainingAborted(const std::string& what, std::string checkpoint)
        : Error(what), checkpoint_(std::move(checkpoint)) {}

    const std::string& checkpoint() const noexcept { return checkpoint_; }

private:
    std::string checkpoint_;
};

} // namespace isp
