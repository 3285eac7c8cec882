#include "mcrf/tail_surrogate.hpp"

#include <cmath>
#include <stdexcept>

namespace mcrf::tail {

int ShellLayout::shells() const {
  int top = -1;
  for (int s : shell_of) top = std::max(top, s);
  return top + 1;
}

void ShellLayout::validate() const {
  if (shell_of.empty()) throw std::invalid_argument("ShellLayout: empty");
  const int count = shells();
  std::vector<int> seen(count, 0);
  for (int s : shell_of) {
    if (s < 0 || s >= count) throw std::invalid_argument("ShellLayout: bad shell id");
    ++seen[s];
  }
  for (int c : seen)
    if (c == 0) throw std::invalid_argument("ShellLayout: empty shell");
}

void TailModel::validate() const {
  const int d = dim();
  if (a.cols() != d || noise_cov.rows() != d || noise_cov.cols() != d || b.rows() != d)
    throw std::invalid_argument("TailModel: dimension mismatch");
  if (d > 64) throw std::invalid_argument("TailModel: d_z must be <= 64");
  if (!noise_cov.isApprox(noise_cov.transpose(), 1e-12))
    throw std::invalid_argument("TailModel: noise_cov must be symmetric");
  shells.validate();
  if (shells.dim() != d) throw std::invalid_argument("TailModel: shell layout size mismatch");
}

std::vector<Eigen::VectorXd> simulate_tail(const TailModel& model, const Eigen::VectorXd& z0,
                                           const std::vector<Eigen::VectorXd>& embeddings,
                                           Rng& rng) {
  model.validate();
  const int d = model.dim();
  if (z0.size() != d) throw std::invalid_argument("simulate_tail: z0 size mismatch");

  // eigendecomposition square root so singular PSD noise stays exactly zero
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(model.noise_cov);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-10)
    throw std::invalid_argument("simulate_tail: noise_cov not positive semidefinite");
  Eigen::MatrixXd chol =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  std::vector<Eigen::VectorXd> path;
  path.reserve(embeddings.size());
  Eigen::VectorXd z = z0;
  Eigen::VectorXd xi(d);
  for (const auto& e : embeddings) {
    if (e.size() != model.b.cols()) throw std::invalid_argument("simulate_tail: embedding size mismatch");
    for (int i = 0; i < d; ++i) xi(i) = rng.normal();
    z = model.a * z + model.b * e + chol * xi;
    path.push_back(z);
  }
  return path;
}

Eigen::MatrixXd history_covariance(const TailModel& model, int steps) {
  const int d = model.dim();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < steps; ++k)
    cov = model.a * cov * model.a.transpose() + model.noise_cov;
  return cov;
}

HistorySummary history_mean(const TailModel& model, const Eigen::VectorXd& z0,
                            const std::vector<Eigen::VectorXd>& embeddings) {
  model.validate();
  const int d = model.dim();
  if (z0.size() != d) throw std::invalid_argument("history_mean: z0 size mismatch");
  if (embeddings.empty()) throw std::invalid_argument("history_mean: empty history");

  Eigen::VectorXd mean = z0;
  for (const auto& e : embeddings) mean = model.a * mean + model.b * e;

  Eigen::MatrixXd cov = history_covariance(model, static_cast<int>(embeddings.size()));

  const int shells = model.shells.shells();
  Eigen::VectorXd s2 = Eigen::VectorXd::Zero(shells);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(shells);
  for (int i = 0; i < d; ++i) {
    s2(model.shells.shell_of[i]) += cov(i, i);
    count(model.shells.shell_of[i]) += 1.0;
  }
  s2.array() /= count.array();

  const double tol = 1e-8;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      double expect = (i == j) ? s2(model.shells.shell_of[i]) : 0.0;
      if (std::abs(cov(i, j) - expect) > tol)
        throw std::runtime_error("shell isotropy violated");
    }
  }
  return {std::move(mean), std::move(s2)};
}

double shell_gain(double s2, double sigma2) {
  if (s2 < 0.0 || sigma2 < 0.0) throw std::invalid_argument("shell_gain: negative variance");
  if (s2 == 0.0 && sigma2 == 0.0) throw std::invalid_argument("degenerate shell");
  return s2 / (s2 + sigma2);
}

Eigen::VectorXd posterior_mean_shellwise(const Eigen::VectorXd& x, const HistorySummary& history,
                                         const ShellLayout& shells, double sigma2) {
  shells.validate();
  const int d = shells.dim();
  if (x.size() != d || history.mean.size() != d)
    throw std::invalid_argument("posterior_mean_shellwise: size mismatch");
  if (history.shell_var.size() != shells.shells())
    throw std::invalid_argument("posterior_mean_shellwise: shell count mismatch");

  Eigen::VectorXd out(d);
  for (int i = 0; i < d; ++i) {
    double kappa = shell_gain(history.shell_var(shells.shell_of[i]), sigma2);
    out(i) = kappa * x(i) + (1.0 - kappa) * history.mean(i);
  }
  return out;
}

Eigen::VectorXd brute_force_posterior(const TailModel& model, const Eigen::VectorXd& z0,
                                      const std::vector<Eigen::VectorXd>& embeddings,
                                      const Eigen::VectorXd& x, double sigma2) {
  model.validate();
  const int d = model.dim();
  if (x.size() != d) throw std::invalid_argument("brute_force_posterior: observation size mismatch");
  if (embeddings.empty()) throw std::invalid_argument("brute_force_posterior: empty history");

  // conditional mean of Z given history, independent of the observation
  Eigen::VectorXd mean = z0;
  for (const auto& e : embeddings) mean = model.a * mean + model.b * e;
  Eigen::MatrixXd v = history_covariance(model, static_cast<int>(embeddings.size()));

  // E[Z | X = x] = mean + V (V + sigma^2 I)^{-1} (x - mean)
  Eigen::MatrixXd obs = v + sigma2 * Eigen::MatrixXd::Identity(d, d);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(obs);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw std::runtime_error("brute_force_posterior: singular observation covariance");
  return mean + v * ldlt.solve(x - mean);
}

}  // namespace mcrf::tail
