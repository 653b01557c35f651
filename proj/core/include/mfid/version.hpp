#pragma once

namespace mfid {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mfid
