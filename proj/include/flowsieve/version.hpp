#pragma once

namespace flowsieve {

inline constexpr const char* kVersion = "0.1.0";

// Version stamped into every JSON artifact and the dataset container.
inline constexpr int kSchemaVersion = 1;

}  // namespace flowsieve
