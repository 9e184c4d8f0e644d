#pragma once

#include <cmath>

namespace lrdlab::detail {

inline double factorial(int m) { return std::tgamma(static_cast<double>(m) + 1.0); }

template <class T>
T ipow(T x, int m) {
    T r = 1;
    for (int i = 0; i < m; ++i) r *= x;
    return r;
}

}  // namespace lrdlab::detail

namespace lrdlab {
using detail::factorial;
using detail::ipow;
}  // namespace lrdlab
