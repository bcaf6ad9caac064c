// Copyright 2026, dflow contributors
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

#include "dflow/core/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace dflow::log {

namespace {

std::atomic<Level> g_level{Level::kWarn};
std::mutex g_mutex;

void emit(Level lvl, const char* tag, std::string_view msg) {
  if (static_cast<int>(lvl) > static_cast<int>(g_level.load())) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << '[' << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level.load(); }

void warn(std::string_view msg) { emit(Level::kWarn, "warn", msg); }
void info(std::string_view msg) { emit(Level::kInfo, "info", msg); }
void debug(std::string_view msg) { emit(Level::kDebug, "debug", msg); }

}  // namespace dflow::log
