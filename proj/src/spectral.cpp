#include "mcrf/spectral.hpp"

#include <cmath>
#include <stdexcept>

#include "mcrf/fft.hpp"

namespace mcrf::spectral {

Spectrum analyze(const GridField& u) {
  const int n = u.n();
  Spectrum s(u.channels(), n);
  std::vector<fft::cd> buf(n);
  for (int c = 0; c < u.channels(); ++c) {
    for (int i = 0; i < n; ++i) buf[i] = fft::cd(u.values(c, i), 0.0);
    fft::transform(buf, false);
    for (int i = 0; i < n; ++i) s(c, i) = buf[i];
  }
  return s;
}

GridField synthesize(const Spectrum& s) {
  const int n = static_cast<int>(s.cols());
  Eigen::MatrixXd v(s.rows(), n);
  std::vector<fft::cd> buf(n);
  for (int c = 0; c < s.rows(); ++c) {
    for (int i = 0; i < n; ++i) buf[i] = s(c, i);
    fft::transform(buf, true);
    for (int i = 0; i < n; ++i) v(c, i) = buf[i].real();
  }
  return GridField(std::move(v));
}

ShellSpec::ShellSpec(int j, int grid_n) : cutoff_j(j), n(grid_n) {
  if (grid_n < 8 || (grid_n & (grid_n - 1)) != 0)
    throw std::invalid_argument("ShellSpec: N must be a power of two and >= 8");
  if (j < 0 || (1 << j) >= grid_n / 2)
    throw std::invalid_argument("ShellSpec: cutoff beyond resolution");
}

int ShellSpec::top_shell() const {
  int j = 0;
  while ((2 << j) < n / 2) ++j;  // smallest j with 2^{j+1} >= N/2
  return j;
}

int ShellSpec::shell_count() const { return top_shell() + 2; }

int ShellSpec::shell_of(int abs_k) const {
  if (abs_k < 0 || abs_k > n / 2) throw std::invalid_argument("ShellSpec: wavenumber out of range");
  if (abs_k <= 1) return -1;
  int j = 0;
  while ((2 << j) < abs_k) ++j;  // smallest j with 2^{j+1} >= |k|
  return j;
}

std::pair<int, int> ShellSpec::shell_range(int shell) const {
  if (shell == -1) return {0, 1};
  if (shell < -1 || shell > top_shell()) throw std::invalid_argument("ShellSpec: bad shell index");
  return {(1 << shell) + 1, std::min(2 << shell, n / 2)};
}

ResolvedSplit lp_project(const GridField& u, int cutoff_j) {
  const int n = u.n();
  if (cutoff_j < 0 || (1 << cutoff_j) >= n / 2)
    throw std::invalid_argument("lp_project: cutoff beyond resolution");
  const int keep = 1 << cutoff_j;
  Spectrum s = analyze(u);
  for (int c = 0; c < s.rows(); ++c)
    for (int i = 0; i < n; ++i)
      if (std::abs(fft::wavenumber(i, n)) > keep) s(c, i) = 0.0;
  GridField low = synthesize(s);
  GridField tail = u - low;  // exact complement in physical space
  return {std::move(low), std::move(tail)};
}

std::vector<GridField> shell_decompose(const GridField& u, const ShellSpec& spec) {
  const int n = u.n();
  if (n != spec.n) throw std::invalid_argument("shell_decompose: grid size mismatch");
  Spectrum s = analyze(u);
  std::vector<GridField> out;
  out.reserve(spec.shell_count());
  for (int shell = -1; shell <= spec.top_shell(); ++shell) {
    auto [lo, hi] = spec.shell_range(shell);
    Spectrum part = Spectrum::Zero(s.rows(), n);
    for (int c = 0; c < s.rows(); ++c)
      for (int i = 0; i < n; ++i) {
        int ak = std::abs(fft::wavenumber(i, n));
        if (ak >= lo && ak <= hi) part(c, i) = s(c, i);
      }
    out.push_back(synthesize(part));
  }
  return out;
}

GridField spectral_derivative(const GridField& u) {
  const int n = u.n();
  Spectrum s = analyze(u);
  for (int c = 0; c < s.rows(); ++c)
    for (int i = 0; i < n; ++i) {
      int k = fft::wavenumber(i, n);
      if (k == n / 2) {
        s(c, i) = 0.0;  // Nyquist has no well-defined odd derivative
      } else {
        s(c, i) *= fft::cd(0.0, static_cast<double>(k));
      }
    }
  return synthesize(s);
}

void BandPartition::validate(int n) const {
  if (low_max < 0 || low_max >= mid_max || mid_max >= n / 2)
    throw std::invalid_argument("BandPartition: need 0 <= low_max < mid_max < N/2");
}

namespace {

// Parseval-consistent band energy from a spectrum: (L/N^2) sum |u_hat|^2
double spec_band_energy(const Spectrum& s, int k_lo, int k_hi) {
  const int n = static_cast<int>(s.cols());
  double acc = 0.0;
  for (int c = 0; c < s.rows(); ++c)
    for (int i = 0; i < n; ++i) {
      int ak = std::abs(fft::wavenumber(i, n));
      if (ak >= k_lo && ak <= k_hi) acc += std::norm(s(c, i));
    }
  return acc * kTwoPi / (static_cast<double>(n) * n);
}

}  // namespace

double band_energy(const GridField& u, int k_lo, int k_hi) {
  return spec_band_energy(analyze(u), k_lo, k_hi);
}

BandErrors band_errors(const GridField& pred, const GridField& truth, const BandPartition& bands) {
  if (pred.n() != truth.n() || pred.channels() != truth.channels())
    throw std::invalid_argument("band_errors: shape mismatch");
  bands.validate(pred.n());
  const int n = pred.n();
  Spectrum diff = analyze(pred - truth);
  Spectrum ref = analyze(truth);
  auto rel = [&](int lo, int hi) {
    double e = std::sqrt(spec_band_energy(diff, lo, hi));
    double r = std::sqrt(spec_band_energy(ref, lo, hi));
    return e / (r + 1e-8);
  };
  return {rel(0, bands.low_max), rel(bands.low_max + 1, bands.mid_max),
          rel(bands.mid_max + 1, n / 2)};
}

}  // namespace mcrf::spectral
