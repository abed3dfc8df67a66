#pragma once

namespace g2t {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kSceneFormat = "g2t-scene v1";
inline constexpr const char* kAdamFormat = "G2TADAM1";

}  // namespace g2t
