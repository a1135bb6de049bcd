#include "uura/kernels/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace uura::kernels {
namespace {

std::atomic<const Backend*> g_active{nullptr};

const Backend* resolve() {
  if (const char* env = std::getenv("UURA_KERNELS")) {
    const std::string_view want{env};
    if (want == "scalar") return &scalar_backend();
    if (want == "avx2" && avx2_available()) return &avx2_backend();
  }
  return avx2_available() ? &avx2_backend() : &scalar_backend();
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Backend& active() {
  const Backend* b = g_active.load(std::memory_order_acquire);
  if (!b) {
    b = resolve();
    g_active.store(b, std::memory_order_release);
  }
  return *b;
}

void force_backend(std::string_view name) {
  if (name == "scalar") {
    g_active.store(&scalar_backend(), std::memory_order_release);
  } else if (name == "avx2") {
    if (!avx2_available())
      throw std::invalid_argument("avx2 backend not available on this CPU");
    g_active.store(&avx2_backend(), std::memory_order_release);
  } else {
    throw std::invalid_argument("unknown kernel backend: " +
                                std::string(name));
  }
}

}  // namespace uura::kernels
