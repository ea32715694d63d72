#include <atomic>
#include <cstdlib>
#include <string>

#include "core/errors.hpp"
#include "kernels/kernels.hpp"

namespace amc::kern {

#if defined(__x86_64__) || defined(_M_X64)
const Backend& avx2_backend();
#endif
#if defined(__aarch64__)
const Backend& neon_backend();
#endif

std::vector<const Backend*> available_backends() {
  std::vector<const Backend*> out;
  out.push_back(&scalar_backend());
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2")) out.push_back(&avx2_backend());
#endif
#if defined(__aarch64__)
  out.push_back(&neon_backend());
#endif
  return out;
}

namespace {

const Backend* pick_default() {
  auto avail = available_backends();
  const Backend* best = avail.front();
  for (const Backend* b : avail) best = b;  // last entry is the widest
  if (const char* env = std::getenv("AMC_KERNELS")) {
    for (const Backend* b : avail) {
      if (std::string(b->name) == env) return b;
    }
    throw ParameterError(std::string("AMC_KERNELS=") + env +
                         " is not available on this machine");
  }
  return best;
}

std::atomic<const Backend*> g_active{nullptr};

}  // namespace

const Backend& backend() {
  const Backend* b = g_active.load(std::memory_order_acquire);
  if (b == nullptr) {
    b = pick_default();
    g_active.store(b, std::memory_order_release);
  }
  return *b;
}

bool set_backend(std::string_view name) {
  for (const Backend* b : available_backends()) {
    if (name == b->name) {
      g_active.store(b, std::memory_order_release);
      return true;
    }
  }
  return false;
}

}  // namespace amc::kern
