/*
 * Copyright 2026 The D3 Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>

namespace d3 {

/// Worker count used by parallel_for. Defaults to D3_THREADS when set,
/// otherwise the hardware concurrency.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
/// write only to per-index slots, so results do not depend on the schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };
void set_log_level(LogLevel level);
LogLevel log_level();
void log_warning(std::string_view msg);
void log_info(std::string_view msg);

/// splitmix64 finalizer; used to derive independent per-image seeds.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace d3
