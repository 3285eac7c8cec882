#include "mcrf/mz.hpp"

#include <cmath>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace mcrf::mz {

void LinearObservableSystem::validate() const {
  const int n = static_cast<int>(f.rows());
  if (f.cols() != n || n == 0) throw std::invalid_argument("LinearObservableSystem: F must be square");
  if (static_cast<int>(resolved_mask.size()) != n)
    throw std::invalid_argument("LinearObservableSystem: mask size mismatch");
  for (int m : resolved_mask)
    if (m != 0 && m != 1) throw std::invalid_argument("LinearObservableSystem: mask entries must be 0/1");
}

Eigen::MatrixXd LinearObservableSystem::liouville() const {
  validate();
  return f.transpose();
}

Eigen::MatrixXd LinearObservableSystem::projector() const {
  validate();
  Eigen::VectorXd d(resolved_mask.size());
  for (std::size_t i = 0; i < resolved_mask.size(); ++i) d(i) = resolved_mask[i];
  return d.asDiagonal();
}

namespace {

double spectral_norm(const Eigen::MatrixXd& m) {
  return m.jacobiSvd().singularValues()(0);
}

// composite Simpson weights over [0, t] on an odd number of nodes
std::vector<double> simpson_weights(double t, int nodes) {
  if (nodes < 3 || nodes % 2 == 0)
    throw std::invalid_argument("quadrature nodes must be odd and >= 3");
  const double h = t / (nodes - 1);
  std::vector<double> w(nodes, 0.0);
  for (int i = 0; i + 2 < nodes; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  return w;
}

}  // namespace

double dyson_residual(const LinearObservableSystem& sys, double t, int quad_nodes) {
  const Eigen::MatrixXd l = sys.liouville();
  const Eigen::MatrixXd p = sys.projector();
  const int n = static_cast<int>(l.rows());
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) - p;
  const Eigen::MatrixXd ql = q * l;

  auto w = simpson_weights(t, quad_nodes);
  Eigen::MatrixXd integral = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < quad_nodes; ++i) {
    const double s = t * i / (quad_nodes - 1);
    Eigen::MatrixXd lhs_exp = ((t - s) * l).exp();
    Eigen::MatrixXd rhs_exp = (s * ql).exp();
    integral += w[i] * (lhs_exp * p * l * rhs_exp);
  }
  Eigen::MatrixXd defect = (t * l).exp() - (t * ql).exp() - integral;
  return spectral_norm(defect);
}

double mz_residual(const LinearObservableSystem& sys, double t, int quad_nodes) {
  const Eigen::MatrixXd l = sys.liouville();
  const Eigen::MatrixXd p = sys.projector();
  const int n = static_cast<int>(l.rows());
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n) - p;
  const Eigen::MatrixXd ql = q * l;

  auto w = simpson_weights(t, quad_nodes);
  Eigen::MatrixXd memory = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < quad_nodes; ++i) {
    const double s = t * i / (quad_nodes - 1);
    Eigen::MatrixXd flow = ((t - s) * l).exp();
    Eigen::MatrixXd orth = (s * ql).exp();
    memory += w[i] * (p * flow * p * l * orth * q * l);
  }
  Eigen::MatrixXd markov = p * (t * l).exp() * p * l;
  Eigen::MatrixXd forcing = p * (t * ql).exp() * q * l;
  Eigen::MatrixXd ddt = p * (t * l).exp() * l;
  return spectral_norm(ddt - markov - memory - forcing);
}

double ssm_memory_equivalence(const SSMKernel& kernel,
                              const std::vector<Eigen::VectorXd>& inputs,
                              std::vector<Eigen::VectorXd>* recurrence_out) {
  const int ns = static_cast<int>(kernel.a.rows());
  if (kernel.a.cols() != ns || kernel.b.rows() != ns || kernel.c.cols() != ns)
    throw std::invalid_argument("SSMKernel: dimension mismatch");

  const int steps = static_cast<int>(inputs.size());
  std::vector<Eigen::VectorXd> rec;
  rec.reserve(steps + 1);
  Eigen::VectorXd h = Eigen::VectorXd::Zero(ns);
  rec.push_back(kernel.c * h);  // m_0 = 0
  for (int k = 0; k < steps; ++k) {
    h = kernel.a * h + kernel.b * inputs[k];
    rec.push_back(kernel.c * h);
  }

  double worst = 0.0;
  // powers built incrementally: pow_k = A^{k-1} B at step k of the sum
  for (int nstep = 0; nstep <= steps; ++nstep) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(kernel.c.rows());
    Eigen::MatrixXd a_pow = Eigen::MatrixXd::Identity(ns, ns);
    for (int k = 1; k <= nstep; ++k) {
      m += kernel.c * a_pow * kernel.b * inputs[nstep - k];
      a_pow = kernel.a * a_pow;
    }
    worst = std::max(worst, (m - rec[nstep]).cwiseAbs().maxCoeff());
  }
  if (recurrence_out) *recurrence_out = std::move(rec);
  return worst;
}

}  // namespace mcrf::mz
