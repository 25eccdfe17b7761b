//
// Copyright 2026 The dppmt Authors
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

#ifndef DPPMT_ERRORS_HPP_
#define DPPMT_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dppmt {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad shape, non-finite entry,
// probability outside (0,1), ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// The public sample is too small to act as a preconditioner (n_pub <= d).
class InsufficientPublicData : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Inversion was refused because the smallest eigenvalue is too small relative
// to the largest.
class SingularMatrix : public Error {
 public:
  SingularMatrix(const std::string& what, double lambda_min, double lambda_max)
      : Error(what), lambda_min_(lambda_min), lambda_max_(lambda_max) {}

  double lambda_min() const { return lambda_min_; }
  double lambda_max() const { return lambda_max_; }

 private:
  double lambda_min_;
  double lambda_max_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::string column)
      : Error(what), line_(line), column_(std::move(column)) {}

  // 1-based line number in the source file (the header is line 1).
  std::size_t line() const { return line_; }
  const std::string& column() const { return column_; }

 private:
  std::size_t line_;
  std::string column_;
};

class IoError : public Error {
 public:
  IoError(const std::string& what, std::string path)
      : Error(what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace dppmt

#endif  // DPPMT_ERRORS_HPP_
