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

#include "core/log.hpp"

#include <iostream>
#include <mutex>

#include "core/errors.hpp"

namespace vulgraph {

const char* error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kParse: return "ParseError";
    case ErrorKind::kIntegrity: return "IntegrityError";
    case ErrorKind::kMapping: return "MappingError";
    case ErrorKind::kDimension: return "DimensionError";
    case ErrorKind::kProvider: return "ProviderError";
    case ErrorKind::kAlignment: return "AlignmentError";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kData: return "DataError";
    case ErrorKind::kDivergence: return "DivergenceError";
    case ErrorKind::kRejectedInput: return "RejectedInput";
    case ErrorKind::kIo: return "IoError";
    case ErrorKind::kPrecondition: return "PreconditionError";
  }
  return "Error";
}

namespace log {
namespace {

std::mutex g_mutex;
Sink g_sink;

void emit(Level level, const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_mutex);
  if (g_sink) {
    g_sink(level, msg);
    return;
  }
  static const char* const kTags[] = {"info", "warning", "error"};
  std::cerr << "[vulgraph " << kTags[static_cast<int>(level)] << "] " << msg << '\n';
}

}  // namespace

void set_sink(Sink sink) {
  std::lock_guard<std::mutex> lock(g_mutex);
  g_sink = std::move(sink);
}

void info(const std::string& msg) { emit(Level::kInfo, msg); }
void warn(const std::string& msg) { emit(Level::kWarning, msg); }
void error(const std::string& msg) { emit(Level::kError, msg); }

}  // namespace log
}  // namespace vulgraph
