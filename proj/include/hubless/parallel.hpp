/* Copyright 2026 The Hubless Authors. All Rights Reserved.

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

#ifndef HUBLESS_PARALLEL_HPP_
#define HUBLESS_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace hubless {

// Worker cap used when a caller passes threads == 0. Initialized from
// HUBLESS_THREADS, else the hardware concurrency.
std::size_t DefaultThreads();
void SetDefaultThreads(std::size_t threads);

// Runs body(i) for i in [0, n), split into contiguous chunks over at most
// `threads` workers. Bodies must only write to per-index state; results are
// then independent of the worker count.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body,
                 std::size_t threads = 0);

}  // namespace hubless

#endif  // HUBLESS_PARALLEL_HPP_
