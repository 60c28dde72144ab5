#pragma once

namespace lpn {

inline constexpr const char* kVersion = "0.1.0";

// Version tag embedded in every serialized model and report.
inline constexpr int kModelFormatVersion = 1;

}  // namespace lpn
