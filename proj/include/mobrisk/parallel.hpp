// Copyright 2026 The mobrisk Authors
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

#pragma once

#include <cstddef>
#if defined(_OPENMP)
#include <omp.h>
#endif

namespace mobrisk {

inline int max_threads() {
#if defined(_OPENMP)
  return ::omp_get_max_threads();
#else
  return 1;
#endif
}

inline int thread_id() {
#if defined(_OPENMP)
  return ::omp_get_thread_num();
#else
  return 0;
#endif
}

inline void set_threads(int n) {
#if defined(_OPENMP)
  ::omp_set_num_threads(n < 1 ? 1 : n);
#else
  (void)n;
#endif
}

// Static-schedule loop over [0, n). Bodies must write disjoint outputs.
template <typename F>
void parallel_for(std::ptrdiff_t n, F&& f) {
#if defined(_OPENMP)
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
#endif
}

}  // namespace mobrisk
