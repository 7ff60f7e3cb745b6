// Copyright 2026 The floqlin Authors
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

// parallel.hpp: Static-partition parallel loop over an index range.

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace floqlin {

inline unsigned worker_count(std::size_t work_items) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(1, work_items)));
}

// Runs body(i) for i in [0, n). Each index is visited exactly once; results
// must be written to per-index slots so the outcome does not depend on the
// number of workers. The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(std::size_t n, const Body& body) {
    const unsigned workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

// Deterministic pairwise (tree) sum of per-index values; independent of the
// scheduling that produced them.
template <class T>
T pairwise_sum(const std::vector<T>& values, std::size_t begin, std::size_t end) {
    if (end - begin == 0) return T{};
    if (end - begin == 1) return values[begin];
    const std::size_t mid = begin + (end - begin) / 2;
    return pairwise_sum(values, begin, mid) + pairwise_sum(values, mid, end);
}

template <class T>
T pairwise_sum(const std::vector<T>& values) {
    return pairwise_sum(values, 0, values.size());
}

}  // namespace floqlin
