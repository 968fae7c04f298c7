#pragma once

namespace evorl {

/// Keeps large short-lived buffers on the heap instead of fresh mmap pages.
/// Returns false outside glibc or when a setting is rejected. Call once at
/// startup.
bool tune_allocator();

}  // namespace evorl
