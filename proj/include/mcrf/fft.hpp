#pragma once

#include <complex>
#include <vector>

namespace mcrf::fft {

using cd = std::complex<double>;

// In-place iterative radix-2 FFT, n a power of two. Forward transform uses
// the e^{-ikx} convention; the inverse divides by n.
void transform(std::vector<cd>& a, bool inverse);

// Wavenumber of spectral index i for an n-point transform, in [-n/2, n/2].
// Index n/2 maps to +n/2 (the Nyquist bin carries both signs).
inline int wavenumber(int i, int n) { return (i <= n / 2) ? i : i - n; }

}  // namespace mcrf::fft
