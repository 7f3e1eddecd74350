#pragma once

#include "qinpaint/qtensor.hpp"

namespace qinpaint::imaging::detail {

// Mirror index without repeating the edge sample (..., 2, 1, 0, 1, 2, ...).
inline Index reflect_index(Index i, Index n) {
    if (n == 1) return 0;
    const Index period = 2 * (n - 1);
    i %= period;
    return i < n ? i : period - i;
}

inline Index round_up(Index v, Index multiple) { return (v + multiple - 1) / multiple * multiple; }

}  // namespace qinpaint::imaging::detail
