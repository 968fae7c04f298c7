#include "evorl/runtime.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace evorl {

bool tune_allocator() {
#if defined(__GLIBC__)
  // glibc rejects mmap thresholds above 32 MiB on 64-bit targets.
  const bool mmap_ok = mallopt(M_MMAP_THRESHOLD, 32 << 20) == 1;
  const bool trim_ok = mallopt(M_TRIM_THRESHOLD, 1 << 30) == 1;
  const bool pad_ok = mallopt(M_TOP_PAD, 64 << 20) == 1;
  return mmap_ok && trim_ok && pad_ok;
#else
  return false;
#endif
}

}  // namespace evorl
