#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "mcrf/grid.hpp"

namespace mcrf::spectral {

using Spectrum = Eigen::MatrixXcd;  // channels x N, full complex DFT

Spectrum analyze(const GridField& u);
GridField synthesize(const Spectrum& s);

// Dyadic shell layout over integer wavenumbers: shell -1 holds |k| <= 1,
// shell j >= 0 holds 2^j < |k| <= 2^{j+1}. The shells partition 0..N/2.
// The sharp low-pass S_J keeps |k| <= 2^J.
struct ShellSpec {
  int cutoff_j;  // J >= 0, 2^J < N/2
  int n;         // grid size the spec applies to

  ShellSpec(int j, int grid_n);
  int shell_count() const;          // shells -1 .. top_shell()
  int top_shell() const;            // ceil(log2(N/2)) - 1
  int shell_of(int abs_k) const;    // shell index holding |k|
  std::pair<int, int> shell_range(int shell) const;  // inclusive |k| range
};

// low-pass y = S_J u (keep |k| <= 2^J) and exact complement z = u - y
struct ResolvedSplit {
  GridField low;
  GridField tail;
};
ResolvedSplit lp_project(const GridField& u, int cutoff_j);

// per-shell components; summing them reconstructs u up to FFT roundoff
std::vector<GridField> shell_decompose(const GridField& u, const ShellSpec& spec);

// d/dx via ik multiplication; the Nyquist bin of odd derivatives is zeroed
GridField spectral_derivative(const GridField& u);

// Wavenumber bands for error reporting: low |k| <= low_max,
// mid low_max < |k| <= mid_max, high mid_max < |k| <= N/2.
struct BandPartition {
  int low_max = 4;
  int mid_max = 16;

  void validate(int n) const;
};

struct BandErrors {
  double low;
  double mid;
  double high;
};

// per-band relative l2 errors, denominator regularized by 1e-8
BandErrors band_errors(const GridField& pred, const GridField& truth, const BandPartition& bands);

// squared l2 energy of u restricted to |k| in [k_lo, k_hi]
double band_energy(const GridField& u, int k_lo, int k_hi);

}  // namespace mcrf::spectral
