#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace mcrf {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Periodic 1D field sampled on a uniform grid over [0, 2*pi). Rows are
// channels, columns are grid points. N must be a power of two and >= 8 so
// spectral cutoffs and the pooling operators are well defined.
struct GridField {
  Eigen::MatrixXd values;  // channels x N

  GridField() = default;
  explicit GridField(Eigen::MatrixXd v) : values(std::move(v)) { validate(); }

  static GridField zeros(int channels, int n) {
    return GridField(Eigen::MatrixXd::Zero(channels, n));
  }

  // single-channel field sampled from f at x_i = 2*pi*i/N
  static GridField sample(int n, const std::function<double(double)>& f) {
    Eigen::MatrixXd v(1, n);
    for (int i = 0; i < n; ++i) v(0, i) = f(kTwoPi * i / n);
    return GridField(v);
  }

  int channels() const { return static_cast<int>(values.rows()); }
  int n() const { return static_cast<int>(values.cols()); }
  double dx() const { return kTwoPi / n(); }

  void validate() const {
    int n_ = static_cast<int>(values.cols());
    if (values.rows() < 1) throw std::invalid_argument("GridField: needs at least one channel");
    if (n_ < 8 || (n_ & (n_ - 1)) != 0)
      throw std::invalid_argument("GridField: N must be a power of two and >= 8");
    if (!values.allFinite()) throw std::invalid_argument("GridField: values must be finite");
  }

  // norms use the trapezoidal quadrature weight 2*pi/N, exact for the
  // periodic trigonometric interpolant
  double l2() const { return std::sqrt(dx() * values.squaredNorm()); }
  double linf() const { return values.cwiseAbs().maxCoeff(); }
  double l4() const { return std::pow(dx() * values.array().pow(4).sum(), 0.25); }
  double dot(const GridField& other) const {
    return dx() * (values.array() * other.values.array()).sum();
  }

  GridField operator+(const GridField& o) const { return GridField(values + o.values); }
  GridField operator-(const GridField& o) const { return GridField(values - o.values); }
  GridField scaled(double a) const { return GridField(a * values); }
};

}  // namespace mcrf
