// Copyright 2026 The vulgraph Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace vulgraph {

// Error categories surfaced through the C API as status codes.
enum class ErrorKind {
  kParse = 1,
  kIntegrity,
  kMapping,
  kDimension,
  kProvider,
  kAlignment,
  kConfig,
  kData,
  kDivergence,
  kRejectedInput,
  kIo,
  kPrecondition,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define VULGRAPH_DEFINE_ERROR(Name, Kind)                              \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

VULGRAPH_DEFINE_ERROR(ParseError, kParse)
VULGRAPH_DEFINE_ERROR(IntegrityError, kIntegrity)
VULGRAPH_DEFINE_ERROR(MappingError, kMapping)
VULGRAPH_DEFINE_ERROR(DimensionError, kDimension)
VULGRAPH_DEFINE_ERROR(AlignmentError, kAlignment)
VULGRAPH_DEFINE_ERROR(ConfigError, kConfig)
VULGRAPH_DEFINE_ERROR(DataError, kData)
VULGRAPH_DEFINE_ERROR(RejectedInput, kRejectedInput)
VULGRAPH_DEFINE_ERROR(IoError, kIo)
VULGRAPH_DEFINE_ERROR(PreconditionError, kPrecondition)

#undef VULGRAPH_DEFINE_ERROR

class ProviderError : public Error {
 public:
  ProviderError(std::string provider, const std::string& what)
      : Error(ErrorKind::kProvider, provider + ": " + what), provider_(std::move(provider)) {}
  const std::string& provider() const noexcept { return provider_; }

 private:
  std::string provider_;
};

const char* error_kind_name(ErrorKind kind) noexcept;

}  // namespace vulgraph
