#pragma once

namespace rost {

inline constexpr const char* kLibraryName = "rostlab";
inline constexpr const char* kLibraryVersion = "1.0.0";

// Identifier of the seed-expansion scheme recorded in run manifests.
// Outputs are only comparable between builds that share this identifier.
inline constexpr const char* kRngScheme = "philox4x32-10/v1";

inline constexpr int kRecordSchemaVersion = 1;

}  // namespace rost
