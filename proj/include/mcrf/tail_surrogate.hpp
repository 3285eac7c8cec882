#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mcrf/rng.hpp"

namespace mcrf::tail {

// Assignment of state coordinates to shells. Shell ids must be contiguous
// starting at 0 and every shell must be nonempty.
struct ShellLayout {
  std::vector<int> shell_of;  // coordinate -> shell id

  int shells() const;
  int dim() const { return static_cast<int>(shell_of.size()); }
  void validate() const;
};

// Linear-Gaussian tail dynamics Z_{k+1} = A Z_k + B E_k + eta_k with
// eta ~ N(0, noise_cov). Embeddings E_k are exogenous.
struct TailModel {
  Eigen::MatrixXd a;          // d_z x d_z
  Eigen::MatrixXd b;          // d_z x d_e
  Eigen::MatrixXd noise_cov;  // d_z x d_z, symmetric PSD
  ShellLayout shells;

  int dim() const { return static_cast<int>(a.rows()); }
  void validate() const;
};

// one sampled path Z_1 .. Z_{n+1} driven by the given embeddings
std::vector<Eigen::VectorXd> simulate_tail(const TailModel& model, const Eigen::VectorXd& z0,
                                           const std::vector<Eigen::VectorXd>& embeddings,
                                           Rng& rng);

// Conditional law of Z_{n+1} given z0 and all embeddings: mean from the
// driven recursion, per-shell variances from iterating
// Cov_{k+1} = A Cov_k A^T + noise_cov. Throws "shell isotropy violated"
// when that covariance is not block-isotropic within 1e-8.
struct HistorySummary {
  Eigen::VectorXd mean;       // M*_{n+1}
  Eigen::VectorXd shell_var;  // s^2 per shell
};
HistorySummary history_mean(const TailModel& model, const Eigen::VectorXd& z0,
                            const std::vector<Eigen::VectorXd>& embeddings);

// full conditional covariance, for oracles and diagnostics
Eigen::MatrixXd history_covariance(const TailModel& model, int steps);

// posterior blending weight s^2 / (s^2 + sigma^2)
double shell_gain(double s2, double sigma2);

// E[Z | X] for X = Z + sigma * xi via per-shell gains on (x - mean)
Eigen::VectorXd posterior_mean_shellwise(const Eigen::VectorXd& x, const HistorySummary& history,
                                         const ShellLayout& shells, double sigma2);

// Exact Gaussian conditioning of Z_{n+1} on the noisy observation
// X = Z_{n+1} + sigma * xi using the full covariance (Schur complement).
// Independent of the shell structure; d_z <= 64.
Eigen::VectorXd brute_force_posterior(const TailModel& model, const Eigen::VectorXd& z0,
                                      const std::vector<Eigen::VectorXd>& embeddings,
                                      const Eigen::VectorXd& x, double sigma2);

}  // namespace mcrf::tail
