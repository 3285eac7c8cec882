#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mcrf::ot {

// Uniformly weighted point cloud, one sample per row.
struct Cloud {
  Eigen::MatrixXd points;  // n x d

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

// Minimum-cost perfect matching on a dense n x n cost matrix by shortest
// augmenting paths (O(n^3)). Returns the column matched to each row.
double solve_assignment(const Eigen::MatrixXd& cost, std::vector<int>* row_to_col = nullptr);

// exact 2- and 1-Wasserstein distances between equal-size uniform clouds
double w2_empirical(const Cloud& a, const Cloud& b);
double w1_empirical(const Cloud& a, const Cloud& b);

struct Gaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// closed-form Gaussian W2 (Bures metric on covariances)
double w2_gaussian(const Gaussian& a, const Gaussian& b);

// Biased (V-statistic) RBF MMD with kernel exp(-|x-y|^2 / (2 l^2)). This is
// the exact MMD between the two empirical measures.
double mmd_rbf(const Cloud& a, const Cloud& b, double lengthscale);

}  // namespace mcrf::ot
