#pragma once

namespace veripatient {

inline constexpr const char* kToolVersion = "0.1.0";

} // namespace veripatient
