#include <cstdlib>
#include <cstring>

#include "sfl/kernels.hpp"

namespace sfl::kernels {
namespace {

const Ops* select() {
  if (const char* env = std::getenv("SFL_KERNELS")) {
    if (std::strcmp(env, "scalar") == 0) return &scalar();
#if defined(__x86_64__)
    if (std::strcmp(env, "avx2") == 0 && avx2_supported()) return &avx2();
#endif
  }
#if defined(__x86_64__)
  if (avx2_supported()) return &avx2();
#endif
  return &scalar();
}

}  // namespace

const Ops& active() {
  static const Ops* ops = select();
  return *ops;
}

}  // namespace sfl::kernels
