/* Copyright 2026 The rpusim Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rpusim/kernels.hpp"

#include <atomic>
#include <cstdlib>

namespace rpusim::kernels {

namespace detail {
#ifdef RPUSIM_HAVE_AVX2_SOURCES
const Ops *avx2_table(); // defined in kernels_avx2.cpp
#else
inline const Ops *avx2_table() { return nullptr; }
#endif
} // namespace detail

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops *resolve(std::string_view name) {
  if (name == "scalar")
    return &scalar();
  if (name == "avx2")
    return avx2();
  if (name == "auto" || name.empty())
    return avx2() ? avx2() : &scalar();
  return nullptr;
}

std::atomic<const Ops *> g_active{nullptr};

const Ops *initial_selection() {
  if (const char *env = std::getenv("RPUSIM_KERNEL")) {
    if (const Ops *ops = resolve(env))
      return ops;
  }
  return resolve("auto");
}

} // namespace

const Ops *avx2() {
  static const Ops *table = cpu_has_avx2_fma() ? detail::avx2_table() : nullptr;
  return table;
}

const Ops &active() {
  const Ops *ops = g_active.load(std::memory_order_acquire);
  if (!ops) {
    ops = initial_selection();
    g_active.store(ops, std::memory_order_release);
  }
  return *ops;
}

bool select(std::string_view name) {
  const Ops *ops = resolve(name);
  if (!ops)
    return false;
  g_active.store(ops, std::memory_order_release);
  return true;
}

} // namespace rpusim::kernels
