#pragma once

namespace scres {

inline constexpr const char* kModelVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

}  // namespace scres
