/* Copyright 2026 The h2h Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "h2h/error.hpp"

namespace h2h {

// Worker count from H2H_THREADS; unset or 0 means hardware concurrency.
inline unsigned worker_count() {
  unsigned n = 0;
  if (const char* env = std::getenv("H2H_THREADS"); env && *env) {
    try {
      const long v = std::stol(env);
      if (v < 0) throw ValidationError("H2H_THREADS must be >= 0");
      n = static_cast<unsigned>(v);
    } catch (const std::logic_error&) {
      throw ValidationError(std::string("H2H_THREADS is not an integer: ") + env);
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

// Evaluates fn(0..n-1) on up to `threads` workers and returns the results in
// index order. If any call throws, the exception from the lowest index is
// rethrown after all workers finish.
template <typename Fn>
auto parallel_map(std::size_t n, Fn&& fn, unsigned threads = worker_count())
    -> std::vector<std::invoke_result_t<Fn&, std::size_t>> {
  using Result = std::invoke_result_t<Fn&, std::size_t>;
  std::vector<std::optional<Result>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned count = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
  if (count <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(count);
    for (unsigned k = 0; k < count; ++k) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace h2h
