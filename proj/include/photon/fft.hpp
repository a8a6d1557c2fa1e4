#pragma once

#include <complex>
#include <span>

namespace photon::fft {

enum class Direction { Forward, Backward };

/// Unnormalized in-place DFT. Forward uses exp(-2*pi*i*jk/n), Backward exp(+2*pi*i*jk/n).
/// Safe to call from several threads at once; plans are cached per (size, direction).
void transform(std::span<std::complex<double>> data, Direction dir);

}  // namespace photon::fft
