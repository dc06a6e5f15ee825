#pragma once

namespace slikit {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kManifestVersion = 1;

}  // namespace slikit
