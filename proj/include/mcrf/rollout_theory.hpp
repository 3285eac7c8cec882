#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "mcrf/check.hpp"
#include "mcrf/transport.hpp"

namespace mcrf::theory {

// Envelope for the recursion d_{n+1} <= e^{alpha_n} d_n + eps_n:
// bound_n = e^{sum alpha} d_0 + sum_k e^{sum_{j>k} alpha} eps_k.
// Returns bounds for n = 0 .. alphas.size().
std::vector<double> gronwall_envelope(double d0, const std::vector<double>& alphas,
                                      const std::vector<double>& eps);

// W2 between a sampled one-step kernel and reference samples; the empirical
// estimate of a one-step defect.
double estimate_one_step_defect(const ot::Cloud& predicted, const ot::Cloud& reference);

// (e^{l_u} - 1) / l_u, continuously extended to 1 at l_u = 0
double flow_sensitivity_factor(double l_u);

// unit-time flow gap bound: factor(l_u) * l_m * |dm|
double flow_sensitivity_bound(double l_u, double l_m, double dm);

// memory-to-sample Lipschitz composition: factor(l_u) l_m + e^{l_u} l_nu
double compose_memory_lipschitz(double l_u, double l_m, double l_nu);

// observed defect <= l_mem * memory_error + generative_error
CheckRecord conditional_defect_decomposition_check(double observed, double l_mem,
                                                   double memory_error, double generative_error);

// mixture W2^2 <= weighted mean of conditional W2^2
CheckRecord eps_rms_lifting_check(double mixture_w2, const std::vector<double>& conditional_w2,
                                  const std::vector<double>& weights);

// Kinetic-action bound for a velocity field: particles advance by Euler steps
// of v, lhs = W2^2(start, terminal clouds), rhs = the Riemann action
// sum_k dt * mean_i |v(tau_k, x_i)|^2.
struct BudgetReport {
  double lhs;
  double rhs;
};
using VelocityFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;
BudgetReport transport_budget_check(const VelocityFn& velocity, const ot::Cloud& start, int steps);

// closed-form MMD between 1d Gaussians under the RBF kernel
double gaussian_mmd_rbf_1d(double m1, double s1, double m2, double s2, double lengthscale);

// Scalar AR(1) chain u' = rho u + b + N(0, q^2) compared against a model
// chain with offset b_model. Every law in sight is Gaussian, so each
// perturbation inequality is asserted with closed-form values; sampled rows
// carry nonparametric bootstrap bands.
struct Ar1Chain {
  double rho = 0.8;
  double b_true = 0.0;
  double b_model = 0.05;
  double q = 0.3;        // per-step noise std
  double mu0 = 0.0;      // initial mean
  double s0 = 0.1;       // initial std
  int horizon = 20;
  double lengthscale = 1.0;
  int sample_n = 128;
  int bootstrap = 200;
  std::uint64_t seed = 20240817;
};
CheckList invariant_chain_check(const Ar1Chain& chain);

// Flow-matching risk controls terminal W2 for linear drifts: the reference
// velocity transports N(0,1) to N(target_mean, target_std^2); the model
// velocity adds the affine perturbation delta_a * x + delta_c.
struct FmLinearDrift {
  double target_mean = 0.8;
  double target_std = 0.6;
  double delta_a = 0.05;
  double delta_c = -0.03;
  int quad_nodes = 2001;
};
struct FmLinearDriftReport {
  double fm_risk;       // integrated squared velocity error along the path
  double w2_terminal;   // closed-form distance between terminal laws
  double lipschitz;     // sup_tau of the affine slopes
  CheckRecord record;   // w2 <= e^L sqrt(risk)
};
FmLinearDriftReport fm_w2_linear_drift_check(const FmLinearDrift& spec);

}  // namespace mcrf::theory
