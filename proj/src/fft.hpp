#pragma once

#include <complex>
#include <span>

namespace lrdlab::detail {

/// In-place forward DFT, y_j = sum_k x_k exp(-2 pi i jk / n).
/// Plans are cached per length; execution is safe from any thread.
void fft_forward(std::span<std::complex<double>> data);

}  // namespace lrdlab::detail
