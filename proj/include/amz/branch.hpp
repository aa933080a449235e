#pragma once

#include <cstdint>

namespace amz {

/// Which of the two maps is applied in a step: f0 lies below the diagonal, f1 above.
enum class Branch : std::uint8_t { f0 = 0, f1 = 1 };

constexpr int index(Branch b) { return static_cast<int>(b); }

constexpr Branch other(Branch b) { return b == Branch::f0 ? Branch::f1 : Branch::f0; }

}  // namespace amz
