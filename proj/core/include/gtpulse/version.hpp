#pragma once

namespace gtpulse {

inline constexpr const char* kVersion = "0.1.0";

// Format versions carried by every file the toolchain emits. Bump on any
// incompatible change to the corresponding layout.
inline constexpr int kTraceFormatVersion = 1;
inline constexpr int kGroundTruthFormatVersion = 1;
inline constexpr int kModelFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;
inline constexpr int kManifestFormatVersion = 1;

}  // namespace gtpulse
