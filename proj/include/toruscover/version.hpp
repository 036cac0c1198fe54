#pragma once

namespace toruscover {

inline constexpr const char* kVersion = "0.1.0";

/// Schema tag emitted as the last column of every CSV so downstream readers
/// can detect layout changes.
inline constexpr int kCsvSchemaVersion = 1;

}  // namespace toruscover
