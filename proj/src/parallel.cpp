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
#include "d3/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace d3 {
namespace {

int initial_threads() {
  if (const char* env = std::getenv("D3_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::atomic<int> g_threads{initial_threads()};
std::atomic<LogLevel> g_log_level{LogLevel::kWarning};
std::mutex g_log_mutex;
thread_local bool t_in_parallel = false;

struct ParallelScope {
  bool previous;
  ParallelScope() : previous(t_in_parallel) { t_in_parallel = true; }
  ~ParallelScope() { t_in_parallel = previous; }
};

}  // namespace

int thread_count() { return g_threads.load(); }
void set_thread_count(int n) { g_threads.store(std::max(1, n)); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
  // Nested regions run inline on the calling worker.
  if (workers <= 1 || t_in_parallel) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&] {
    ParallelScope scope;
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

void set_log_level(LogLevel level) { g_log_level.store(level); }
LogLevel log_level() { return g_log_level.load(); }

void log_warning(std::string_view msg) {
  if (log_level() < LogLevel::kWarning) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "warning: " << msg << '\n';
}

void log_info(std::string_view msg) {
  if (log_level() < LogLevel::kInfo) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << msg << '\n';
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace d3
