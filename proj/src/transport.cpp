#include "mcrf/transport.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mcrf::ot {

double solve_assignment(const Eigen::MatrixXd& cost, std::vector<int>* row_to_col) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n || n == 0) throw std::invalid_argument("solve_assignment: square cost required");
  const double inf = std::numeric_limits<double>::infinity();

  // Jonker-Volgenant style row insertion with Dijkstra over columns.
  // Potentials u, v maintain reduced costs >= 0; indices are 1-based with a
  // virtual row/column 0.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // column -> row
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<int> way(n + 1, 0);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = match[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  if (row_to_col) {
    row_to_col->assign(n, -1);
    for (int j = 1; j <= n; ++j) (*row_to_col)[match[j] - 1] = j - 1;
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) total += cost(match[j] - 1, j - 1);
  return total;
}

namespace {

enum class GroundCost { kSquared, kPlain };

double wasserstein(const Cloud& a, const Cloud& b, GroundCost gc) {
  if (a.size() != b.size() || a.size() == 0 || a.dim() != b.dim())
    throw std::invalid_argument("equal-size uniform supports required");
  const int n = a.size();
  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double d2 = (a.points.row(i) - b.points.row(j)).squaredNorm();
      cost(i, j) = (gc == GroundCost::kSquared) ? d2 : std::sqrt(d2);
    }
  double total = solve_assignment(cost);
  double avg = total / n;
  return (gc == GroundCost::kSquared) ? std::sqrt(std::max(0.0, avg)) : avg;
}

}  // namespace

double w2_empirical(const Cloud& a, const Cloud& b) { return wasserstein(a, b, GroundCost::kSquared); }
double w1_empirical(const Cloud& a, const Cloud& b) { return wasserstein(a, b, GroundCost::kPlain); }

double w2_gaussian(const Gaussian& a, const Gaussian& b) {
  const int d = static_cast<int>(a.mean.size());
  if (b.mean.size() != d || a.cov.rows() != d || b.cov.rows() != d)
    throw std::invalid_argument("w2_gaussian: dimension mismatch");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(b.cov);
  if (eb.info() != Eigen::Success) throw std::runtime_error("w2_gaussian: eigensolver failed");
  // clamp tiny negative eigenvalues from roundoff before the square roots
  Eigen::VectorXd lb = eb.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd sqrt_b =
      eb.eigenvectors() * lb.cwiseSqrt().asDiagonal() * eb.eigenvectors().transpose();

  Eigen::MatrixXd inner = sqrt_b * a.cov * sqrt_b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ei(inner);
  if (ei.info() != Eigen::Success) throw std::runtime_error("w2_gaussian: eigensolver failed");
  double cross = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  double d2 = (a.mean - b.mean).squaredNorm() + a.cov.trace() + b.cov.trace() - 2.0 * cross;
  return std::sqrt(std::max(0.0, d2));
}

double mmd_rbf(const Cloud& a, const Cloud& b, double lengthscale) {
  if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("mmd_rbf: empty cloud");
  if (a.dim() != b.dim()) throw std::invalid_argument("mmd_rbf: dimension mismatch");
  if (!(lengthscale > 0.0)) throw std::invalid_argument("mmd_rbf: lengthscale must be positive");
  const double inv = 1.0 / (2.0 * lengthscale * lengthscale);
  auto block_mean = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    double acc = 0.0;
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < y.rows(); ++j)
        acc += std::exp(-inv * (x.row(i) - y.row(j)).squaredNorm());
    return acc / (static_cast<double>(x.rows()) * y.rows());
  };
  double m2 = block_mean(a.points, a.points) + block_mean(b.points, b.points) -
              2.0 * block_mean(a.points, b.points);
  return std::sqrt(std::max(0.0, m2));
}

}  // namespace mcrf::ot
