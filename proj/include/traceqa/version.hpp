#pragma once

namespace traceqa {

inline constexpr const char* kToolVersion = "0.1.0";

// Bumped whenever the on-disk layout of any JSON document produced by the
// tool changes incompatibly. JSONL data files are plain record streams; the
// manifest written next to them records the version they were produced with.
inline constexpr int kFormatVersion = 1;

}  // namespace traceqa
