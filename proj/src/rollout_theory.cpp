#include "mcrf/rollout_theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcrf/rng.hpp"

namespace mcrf::theory {

std::vector<double> gronwall_envelope(double d0, const std::vector<double>& alphas,
                                      const std::vector<double>& eps) {
  if (alphas.size() != eps.size())
    throw std::invalid_argument("gronwall_envelope: alphas and eps must align");
  const int n = static_cast<int>(alphas.size());
  std::vector<double> bounds(n + 1);
  bounds[0] = d0;
  for (int end = 1; end <= n; ++end) {
    // exponent sums accumulated backwards from step end-1
    double bound = 0.0;
    double tail_sum = 0.0;  // sum_{j=k+1}^{end-1} alpha_j while k descends
    for (int k = end - 1; k >= 0; --k) {
      bound += std::exp(tail_sum) * eps[k];
      tail_sum += alphas[k];
    }
    bounds[end] = bound + std::exp(tail_sum) * d0;
  }
  return bounds;
}

double estimate_one_step_defect(const ot::Cloud& predicted, const ot::Cloud& reference) {
  return ot::w2_empirical(predicted, reference);
}

double flow_sensitivity_factor(double l_u) {
  if (l_u < 0.0) throw std::invalid_argument("flow_sensitivity_factor: negative Lipschitz constant");
  if (l_u < 1e-12) return 1.0;
  return std::expm1(l_u) / l_u;
}

double flow_sensitivity_bound(double l_u, double l_m, double dm) {
  if (l_m < 0.0 || dm < 0.0) throw std::invalid_argument("flow_sensitivity_bound: negative magnitude");
  return flow_sensitivity_factor(l_u) * l_m * dm;
}

double compose_memory_lipschitz(double l_u, double l_m, double l_nu) {
  if (l_m < 0.0 || l_nu < 0.0)
    throw std::invalid_argument("compose_memory_lipschitz: negative constant");
  return flow_sensitivity_factor(l_u) * l_m + std::exp(l_u) * l_nu;
}

CheckRecord conditional_defect_decomposition_check(double observed, double l_mem,
                                                   double memory_error, double generative_error) {
  return CheckRecord::leq("conditional-defect-decomposition", "conditional-defect-decomposition",
                          observed, l_mem * memory_error + generative_error, 1e-9);
}

CheckRecord eps_rms_lifting_check(double mixture_w2, const std::vector<double>& conditional_w2,
                                  const std::vector<double>& weights) {
  if (conditional_w2.size() != weights.size() || conditional_w2.empty())
    throw std::invalid_argument("eps_rms_lifting_check: weight mismatch");
  double total_w = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw std::invalid_argument("eps_rms_lifting_check: negative weight");
    total_w += weights[i];
    acc += weights[i] * conditional_w2[i] * conditional_w2[i];
  }
  if (std::abs(total_w - 1.0) > 1e-9)
    throw std::invalid_argument("eps_rms_lifting_check: weights must sum to one");
  return CheckRecord::leq("eps-rms-lifting", "conditional-to-law-lifting", mixture_w2 * mixture_w2,
                          acc, 1e-9);
}

BudgetReport transport_budget_check(const VelocityFn& velocity, const ot::Cloud& start, int steps) {
  if (steps < 1) throw std::invalid_argument("transport_budget_check: steps must be positive");
  const int n = start.size();
  const double dt = 1.0 / steps;
  Eigen::MatrixXd pos = start.points;
  double action = 0.0;
  for (int k = 0; k < steps; ++k) {
    const double tau = static_cast<double>(k) / steps;
    double step_cost = 0.0;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v = velocity(tau, pos.row(i).transpose());
      step_cost += v.squaredNorm();
      pos.row(i) += dt * v.transpose();
    }
    action += dt * step_cost / n;
  }
  ot::Cloud terminal{pos};
  double w2 = ot::w2_empirical(start, terminal);
  return {w2 * w2, action};
}

double gaussian_mmd_rbf_1d(double m1, double s1, double m2, double s2, double lengthscale) {
  if (!(lengthscale > 0.0)) throw std::invalid_argument("gaussian_mmd_rbf_1d: lengthscale");
  auto cross = [&](double ma, double va, double mb, double vb) {
    double denom = lengthscale * lengthscale + va + vb;
    return lengthscale / std::sqrt(denom) *
           std::exp(-(ma - mb) * (ma - mb) / (2.0 * denom));
  };
  double v1 = s1 * s1, v2 = s2 * s2;
  double m2sq = cross(m1, v1, m1, v1) + cross(m2, v2, m2, v2) - 2.0 * cross(m1, v1, m2, v2);
  return std::sqrt(std::max(0.0, m2sq));
}

namespace {

struct Marginal {
  double mean;
  double var;
};

// law of the chain after n steps from N(mu0, s0^2)
Marginal chain_marginal(const Ar1Chain& c, double offset, int n) {
  double rn = std::pow(c.rho, n);
  double r2n = std::pow(c.rho * c.rho, n);
  double mean = rn * c.mu0 + offset * (1.0 - rn) / (1.0 - c.rho);
  double var = r2n * c.s0 * c.s0 + c.q * c.q * (1.0 - r2n) / (1.0 - c.rho * c.rho);
  return {mean, var};
}

ot::Cloud sample_gaussian_1d(double mean, double std, int n, Rng& rng) {
  ot::Cloud cl;
  cl.points.resize(n, 1);
  for (int i = 0; i < n; ++i) cl.points(i, 0) = mean + std * rng.normal();
  return cl;
}

// percentile half-width of a bootstrap distribution around its median
double bootstrap_half_width(std::vector<double> vals) {
  std::sort(vals.begin(), vals.end());
  const int n = static_cast<int>(vals.size());
  double lo = vals[static_cast<int>(0.025 * (n - 1))];
  double hi = vals[static_cast<int>(0.975 * (n - 1))];
  return 0.5 * (hi - lo);
}

}  // namespace

CheckList invariant_chain_check(const Ar1Chain& chain) {
  if (!(chain.rho > 0.0 && chain.rho < 1.0))
    throw std::invalid_argument("invariant_chain_check: rho must be in (0,1)");
  CheckList out;
  const double db = std::abs(chain.b_model - chain.b_true);
  const double eps_w2 = db;  // one-step kernels share covariance, differ by a shift
  const double eps_mmd =
      gaussian_mmd_rbf_1d(chain.b_true, chain.q, chain.b_model, chain.q, chain.lengthscale);

  // one-step operator discrepancy matches the kernel discrepancy exactly
  {
    Marginal t = chain_marginal(chain, chain.b_true, 1);
    Marginal m = chain_marginal(chain, chain.b_model, 1);
    out.push_back(CheckRecord::leq("ar1-one-step-discrepancy", "operator-discrepancy-control",
                                   std::abs(t.mean - m.mean), eps_w2, 1e-9));
  }

  // finite-horizon accumulation in W2 and in MMD
  double worst_w2 = -1.0, worst_w2_bound = 0.0;
  double worst_mmd = -1.0, worst_mmd_bound = 0.0;
  for (int n = 1; n <= chain.horizon; ++n) {
    double growth = (1.0 - std::pow(chain.rho, n)) / (1.0 - chain.rho);
    Marginal t = chain_marginal(chain, chain.b_true, n);
    Marginal m = chain_marginal(chain, chain.b_model, n);
    double w2 = std::abs(t.mean - m.mean);  // equal variances
    if (w2 - growth * eps_w2 > worst_w2 - worst_w2_bound) {
      worst_w2 = w2;
      worst_w2_bound = growth * eps_w2;
    }
    double mmd = gaussian_mmd_rbf_1d(t.mean, std::sqrt(t.var), m.mean, std::sqrt(m.var),
                                     chain.lengthscale);
    if (mmd - growth * eps_mmd > worst_mmd - worst_mmd_bound) {
      worst_mmd = mmd;
      worst_mmd_bound = growth * eps_mmd;
    }
  }
  out.push_back(CheckRecord::leq("ar1-finite-horizon-w2", "finite-horizon-perturbation", worst_w2,
                                 worst_w2_bound, 1e-9));
  out.push_back(CheckRecord::leq("ar1-finite-horizon-mmd", "finite-horizon-perturbation", worst_mmd,
                                 worst_mmd_bound, 1e-9));

  // invariant laws
  const double inv_std = chain.q / std::sqrt(1.0 - chain.rho * chain.rho);
  const double inv_mean_t = chain.b_true / (1.0 - chain.rho);
  const double inv_mean_m = chain.b_model / (1.0 - chain.rho);
  out.push_back(CheckRecord::leq("ar1-invariant-w2", "invariant-measure-discrepancy",
                                 std::abs(inv_mean_t - inv_mean_m), eps_w2 / (1.0 - chain.rho),
                                 1e-9));
  double inv_mmd =
      gaussian_mmd_rbf_1d(inv_mean_t, inv_std, inv_mean_m, inv_std, chain.lengthscale);
  out.push_back(CheckRecord::leq("ar1-invariant-mmd", "fm-to-invariant-measure", inv_mmd,
                                 eps_mmd / (1.0 - chain.rho), 1e-9));

  // sampled cells: kernel-metric domination and agreement with closed forms
  Rng rng(chain.seed);
  ot::Cloud st = sample_gaussian_1d(inv_mean_t, inv_std, chain.sample_n, rng);
  ot::Cloud sm = sample_gaussian_1d(inv_mean_m, inv_std, chain.sample_n, rng);
  double mmd_s = ot::mmd_rbf(st, sm, chain.lengthscale);
  double w1_s = ot::w1_empirical(st, sm);
  out.push_back(CheckRecord::leq("ar1-sampled-mmd-vs-w1", "rkhs-unit-ball-lipschitz", mmd_s,
                                 w1_s / chain.lengthscale, 1e-9));

  // bootstrap bands for the sampled statistics vs their analytic values
  std::vector<double> boot_w1, boot_mmd;
  for (int b = 0; b < chain.bootstrap; ++b) {
    ot::Cloud rt, rm;
    rt.points.resize(chain.sample_n, 1);
    rm.points.resize(chain.sample_n, 1);
    for (int i = 0; i < chain.sample_n; ++i) {
      rt.points(i, 0) = st.points(static_cast<int>(rng.below(chain.sample_n)), 0);
      rm.points(i, 0) = sm.points(static_cast<int>(rng.below(chain.sample_n)), 0);
    }
    boot_w1.push_back(ot::w1_empirical(rt, rm));
    boot_mmd.push_back(ot::mmd_rbf(rt, rm, chain.lengthscale));
  }
  double w1_analytic = std::abs(inv_mean_t - inv_mean_m);  // same-shape laws shift
  double band_w1 = bootstrap_half_width(boot_w1) + 2.0 * inv_std / std::sqrt(chain.sample_n);
  out.push_back(CheckRecord::leq("ar1-sampled-w1-matches-analytic", "invariant-measure-discrepancy",
                                 std::abs(w1_s - w1_analytic), band_w1, 0.0));
  double band_mmd = bootstrap_half_width(boot_mmd) + 2.0 / std::sqrt(chain.sample_n);
  out.push_back(CheckRecord::leq("ar1-sampled-mmd-matches-analytic", "fm-risk-controls-mmd",
                                 std::abs(mmd_s - inv_mmd), band_mmd, 0.0));

  // flow-matching risk controls the terminal W2 on a matched linear-drift task
  FmLinearDrift fm;
  fm.target_mean = inv_mean_t;
  fm.target_std = inv_std;
  auto fm_report = fm_w2_linear_drift_check(fm);
  CheckRecord fmrec = fm_report.record;
  fmrec.check_id = "ar1-fm-risk-controls-w2";
  out.push_back(fmrec);

  return out;
}

FmLinearDriftReport fm_w2_linear_drift_check(const FmLinearDrift& spec) {
  const double m = spec.target_mean, s = spec.target_std;
  if (!(s > 0.0)) throw std::invalid_argument("fm_w2_linear_drift_check: target_std must be positive");
  const int nodes = spec.quad_nodes;
  if (nodes < 3 || nodes % 2 == 0)
    throw std::invalid_argument("fm_w2_linear_drift_check: quadrature nodes must be odd");

  auto dpath = [&](double tau) { return (1.0 + s * s) * tau * tau - 2.0 * tau + 1.0; };
  auto a_star = [&](double tau) { return ((1.0 + s * s) * tau - 1.0) / dpath(tau); };
  auto c_star = [&](double tau) { return m * (1.0 - tau * a_star(tau)); };

  // composite Simpson over tau in [0,1]
  auto simpson = [&](const std::function<double(double)>& f) {
    double h = 1.0 / (nodes - 1);
    double acc = 0.0;
    for (int i = 0; i + 2 < nodes; i += 2) {
      double t0 = i * h, t1 = (i + 1) * h, t2 = (i + 2) * h;
      acc += h / 3.0 * (f(t0) + 4.0 * f(t1) + f(t2));
    }
    return acc;
  };

  // squared velocity error under the path marginal N(tau m, D(tau))
  const double da = spec.delta_a, dc = spec.delta_c;
  double risk = simpson([&](double tau) {
    double mu = tau * m, var = dpath(tau);
    return da * da * (mu * mu + var) + 2.0 * da * dc * mu + dc * dc;
  });

  // terminal law of the perturbed affine flow started from N(0,1)
  double scale = s * std::exp(da);  // exp of int (a* + da), int a* = log s
  double mean_q = simpson([&](double tau) {
    double decay = std::exp(da * (1.0 - tau)) * s / std::sqrt(dpath(tau));
    return decay * (c_star(tau) + dc);
  });
  double w2 = std::hypot(mean_q - m, scale - s);

  double lip = 0.0;
  for (int i = 0; i <= 4096; ++i) {
    double tau = static_cast<double>(i) / 4096;
    lip = std::max({lip, std::abs(a_star(tau)), std::abs(a_star(tau) + da)});
  }

  FmLinearDriftReport report;
  report.fm_risk = risk;
  report.w2_terminal = w2;
  report.lipschitz = lip;
  report.record = CheckRecord::leq("fm-risk-controls-w2", "fm-risk-controls-w2", w2,
                                   std::exp(lip) * std::sqrt(risk), 1e-9);
  return report;
}

}  // namespace mcrf::theory
