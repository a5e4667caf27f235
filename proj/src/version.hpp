#pragma once

namespace optlab {

inline constexpr const char* kArtifactName = "optlab";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace optlab
