#include "mcrf/generator.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mcrf/container.hpp"
#include "mcrf/spectral.hpp"

namespace mcrf::gen {
namespace {

using tape::Tape;

Eigen::VectorXd time_features(double t, int dims) {
  Eigen::VectorXd f(dims);
  for (int i = 0; i < dims / 2; ++i) {
    double w = kTwoPi / 2.0 * std::pow(2.0, i);  // pi * 2^i
    f(2 * i) = std::sin(w * t);
    f(2 * i + 1) = std::cos(w * t);
  }
  return f;
}

void allocate_params(const GeneratorConfig& c, tape::ParamStore& s) {
  const int sd = c.state_dim();
  s.add("enc/w0", c.d_m, sd);
  s.add("enc/b0", c.d_m, 1);
  s.add("enc/w1", c.d_m, c.d_m + c.time_embed);
  s.add("enc/b1", c.d_m, 1);
  s.add("ssm/in", c.d_m, c.d_m);
  s.add("ssm/ro_w", c.d_m, c.d_m);
  s.add("ssm/ro_b", c.d_m, 1);
  s.add("film/w0", c.film_hidden, 2 * c.time_embed);
  s.add("film/b0", c.film_hidden, 1);
  s.add("film/w1", 4 * c.hidden, c.film_hidden);
  s.add("film/b1", 4 * c.hidden, 1);
  s.add("vfn/w0", c.hidden, 2 * sd);
  s.add("vfn/b0", c.hidden, 1);
  s.add("vfn/w1", c.hidden, c.hidden);
  s.add("vfn/b1", c.hidden, 1);
  s.add("fus/proj_w", c.hidden, c.d_m);
  s.add("fus/proj_b", c.hidden, 1);
  s.add("fus/gh_w", c.hidden, c.hidden);
  s.add("fus/gh_b", c.hidden, 1);
  s.add("fus/gm_w", c.hidden, c.hidden);
  s.add("fus/gm_b", c.hidden, 1);
  s.add("vfn/w2", sd, c.hidden);
  s.add("vfn/b2", sd, 1);
}

Eigen::VectorXd geometric_decays(int d_m) {
  Eigen::VectorXd a(d_m);
  for (int i = 0; i < d_m; ++i) {
    double frac = (d_m == 1) ? 0.0 : static_cast<double>(i) / (d_m - 1);
    a(i) = 0.5 * std::pow(0.999 / 0.5, frac);
  }
  return a;
}

int encoder_node(Tape& t, Generator& g, int cond_node, double dt) {
  int h = t.gelu(t.dense("enc/w0", "enc/b0", cond_node));
  int with_dt = t.concat(h, t.input(time_features(dt, g.cfg.time_embed)));
  return t.dense("enc/w1", "enc/b1", with_dt);
}

// diagonal recurrence h <- a (.) h + B_s e over inputs oldest-first; the zero
// left-padding contributes nothing, so the scan starts at the first entry
int ssm_scan_node(Tape& t, Generator& g, const std::vector<int>& inputs) {
  int h = -1;
  for (int e : inputs) {
    int drive = t.matvec("ssm/in", e);
    h = (h < 0) ? drive : t.add(t.cmul_const(h, g.decay), drive);
  }
  if (h < 0) h = t.input(Eigen::VectorXd::Zero(g.cfg.d_m));
  return t.dense("ssm/ro_w", "ssm/ro_b", t.layernorm(h));
}

// v_theta with FiLM-modulated hidden layers; m_node < 0 skips fusion
int vfn_node(Tape& t, Generator& g, double tau, int u_node, int cond_node, int m_node,
             double dt) {
  const int hid = g.cfg.hidden;
  Eigen::VectorXd tf(2 * g.cfg.time_embed);
  tf << time_features(tau, g.cfg.time_embed), time_features(dt, g.cfg.time_embed);
  int film = t.dense("film/w1", "film/b1", t.gelu(t.dense("film/w0", "film/b0", t.input(tf))));
  int g1 = t.slice(film, 0, hid);
  int b1 = t.slice(film, hid, hid);
  int g2 = t.slice(film, 2 * hid, hid);
  int b2 = t.slice(film, 3 * hid, hid);

  int x = t.concat(u_node, cond_node);
  int pre1 = t.dense("vfn/w0", "vfn/b0", x);
  int h1 = t.gelu(t.add(t.add(pre1, t.cmul(pre1, g1)), b1));
  int pre2 = t.dense("vfn/w1", "vfn/b1", h1);
  int h2 = t.gelu(t.add(t.add(pre2, t.cmul(pre2, g2)), b2));

  int fused = h2;
  if (m_node >= 0) {
    int mp = t.dense("fus/proj_w", "fus/proj_b", m_node);
    int gate_h = t.sigmoid(t.dense("fus/gh_w", "fus/gh_b", h2));
    int gate_m = t.sigmoid(t.dense("fus/gm_w", "fus/gm_b", mp));
    fused = t.add(t.cmul(h2, gate_h), t.cmul(mp, gate_m));
  }
  return t.dense("vfn/w2", "vfn/b2", fused);
}

// Euler feedback states for sequence training; mirrors integrate_velocity so
// tape values match sample_next bitwise for the same draws
int euler_feedback_node(Tape& t, Generator& g, int cond_node, int m_node, double dt, int k_steps,
                        const Eigen::VectorXd& z) {
  int state = t.input(z);
  double h = 1.0 / k_steps;
  for (int k = 0; k < k_steps; ++k) {
    double tau = k * h;
    int v = vfn_node(t, g, tau, state, cond_node, m_node, dt);
    state = t.add(state, t.scale(v, h));
  }
  return state;
}

Eigen::VectorXd draw_normal(Rng& rng, int dim) {
  Eigen::VectorXd z(dim);
  for (int i = 0; i < dim; ++i) z(i) = rng.normal();
  return z;
}

// dense matrix of the conditioning pipeline acting on a flat state, used for
// the differentiable feedback branch of sequence training
Eigen::MatrixXd cond_pipeline_matrix(const GeneratorConfig& cfg, const CondPipeline& pipe) {
  const int n = cfg.state_n;
  Eigen::MatrixXd per_channel = Eigen::MatrixXd::Identity(n, n);
  for (int col = 0; col < n; ++col) {
    Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(1, n);
    unit(0, col) = 1.0;
    GridField basis(unit);
    if (pipe.cutoff_j >= 0) basis = spectral::lp_project(basis, pipe.cutoff_j).low;
    if (pipe.degraded) basis = pde::degrade(basis);
    per_channel.col(col) = basis.values.row(0).transpose();
  }
  const int sd = cfg.state_dim();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(sd, sd);
  for (int c = 0; c < cfg.channels; ++c)
    full.block(c * n, c * n, n, n) = per_channel;
  return full;
}

struct Adam {
  std::vector<Eigen::MatrixXd> m1, m2;
  int t = 0;

  explicit Adam(const tape::ParamStore& store) {
    for (const auto& p : store.all()) {
      m1.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
      m2.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    }
  }

  void step(tape::ParamStore& store, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++t;
    double c1 = 1.0 - std::pow(beta1, t);
    double c2 = 1.0 - std::pow(beta2, t);
    std::size_t i = 0;
    for (auto& p : store.all()) {
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * p.grad;
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * p.grad.cwiseProduct(p.grad);
      p.value.array() -=
          lr * (m1[i].array() / c1) / ((m2[i].array() / c2).sqrt() + eps);
      ++i;
    }
  }
};

double cosine_restart_lr(const TrainConfig& cfg, int iter) {
  double remaining = iter;
  double period = cfg.restart_period;
  while (remaining >= period) {
    remaining -= period;
    period = std::max(1.0, period * cfg.restart_mult);
  }
  double x = remaining / period;
  return cfg.lr_min + 0.5 * (cfg.lr - cfg.lr_min) * (1.0 + std::cos(kTwoPi / 2.0 * x));
}

}  // namespace

void GeneratorConfig::validate() const {
  if (state_n < 8 || (state_n & (state_n - 1)) != 0)
    throw std::invalid_argument("state_n must be a power of two and >= 8");
  if (channels < 1) throw std::invalid_argument("channels must be >= 1");
  if (hidden < 1 || d_m < 1 || film_hidden < 1)
    throw std::invalid_argument("layer widths must be positive");
  if (l_max < 1) throw std::invalid_argument("l_max must be >= 1");
  if (time_embed < 2 || time_embed % 2 != 0)
    throw std::invalid_argument("time_embed must be even and >= 2");
}

void FifoBuffer::push(Eigen::VectorXd e) {
  entries.push_back(std::move(e));
  while (static_cast<int>(entries.size()) > l_max) entries.pop_front();
}

Generator Generator::init(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Generator g;
  g.cfg = cfg;
  allocate_params(cfg, g.params);
  g.decay = geometric_decays(cfg.d_m);
  Rng rng = RngKey(seed).derive(0).stream();
  for (auto& p : g.params.all()) {
    if (p.value.cols() == 1) continue;  // biases start at zero
    double scale = 1.0 / std::sqrt(static_cast<double>(p.value.cols()));
    for (int r = 0; r < p.value.rows(); ++r)
      for (int c = 0; c < p.value.cols(); ++c) p.value(r, c) = scale * rng.normal();
  }
  return g;
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "euler") return Integrator::euler;
  if (name == "heun") return Integrator::heun;
  throw std::invalid_argument("unknown integrator: " + name);
}

Eigen::VectorXd integrate_velocity(const VelocityFn& v, Eigen::VectorXd state, int k_steps,
                                   Integrator integrator) {
  if (k_steps < 1) throw std::invalid_argument("k_steps must be >= 1");
  double h = 1.0 / k_steps;
  for (int k = 0; k < k_steps; ++k) {
    double tau = k * h;
    if (integrator == Integrator::euler) {
      // materialized before the add so the arithmetic matches the training
      // tape's scale-then-add sequence bitwise (no fused multiply-add)
      Eigen::VectorXd step = h * v(tau, state);
      state = state + step;
    } else {
      Eigen::VectorXd v1 = v(tau, state);
      Eigen::VectorXd predictor = state + h * v1;
      Eigen::VectorXd v2 = v((k + 1) * h, predictor);
      state = state + 0.5 * h * (v1 + v2);
    }
  }
  return state;
}

GridField condition(const GridField& state, const CondPipeline& pipe) {
  GridField out = state;
  if (pipe.cutoff_j >= 0) out = spectral::lp_project(out, pipe.cutoff_j).low;
  if (pipe.degraded) out = pde::degrade(out);
  return out;
}

Eigen::VectorXd flatten(const GridField& u) {
  Eigen::VectorXd v(u.values.size());
  for (int c = 0; c < u.channels(); ++c)
    v.segment(c * u.n(), u.n()) = u.values.row(c).transpose();
  return v;
}

GridField unflatten(const Eigen::VectorXd& v, int channels, int n) {
  if (v.size() != channels * n) throw std::invalid_argument("unflatten size mismatch");
  Eigen::MatrixXd m(channels, n);
  for (int c = 0; c < channels; ++c) m.row(c) = v.segment(c * n, n).transpose();
  return GridField(std::move(m));
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> memory_from_state(Generator& g, const GridField& cond,
                                                              double dt,
                                                              const FifoBuffer& buffer) {
  if (flatten(cond).size() != g.cfg.state_dim())
    throw std::invalid_argument("conditioning state dimension mismatch");
  if (buffer.size() > g.cfg.l_max)
    throw std::invalid_argument("buffer exceeds l_max");
  Tape t(g.params);
  int e = encoder_node(t, g, t.input(flatten(cond)), dt);
  std::vector<int> inputs;
  // a full buffer plus the fresh embedding spans l_max entries after padding,
  // so the oldest stored entry drops out of the scan
  int start = (buffer.size() + 1 > g.cfg.l_max) ? buffer.size() + 1 - g.cfg.l_max : 0;
  for (int i = start; i < buffer.size(); ++i) {
    if (buffer.entries[i].size() != g.cfg.d_m)
      throw std::invalid_argument("buffer embedding dimension mismatch");
    inputs.push_back(t.input(buffer.entries[i]));
  }
  inputs.push_back(e);
  int m = ssm_scan_node(t, g, inputs);
  return {t.value(m), t.value(e)};
}

GridField fused_vector_field(Generator& g, double tau, const GridField& u_tau,
                             const GridField& cond, const Eigen::VectorXd& m, double dt) {
  Tape t(g.params);
  int u_node = t.input(flatten(u_tau));
  int cond_node = t.input(flatten(cond));
  int m_node = -1;
  if (g.cfg.use_memory && m.size() > 0) {
    if (m.size() != g.cfg.d_m) throw std::invalid_argument("memory dimension mismatch");
    m_node = t.input(m);
  }
  int v = vfn_node(t, g, tau, u_node, cond_node, m_node, dt);
  if (!t.value(v).allFinite()) throw std::runtime_error("non-finite vector field output");
  return unflatten(t.value(v), g.cfg.channels, g.cfg.state_n);
}

double fm_loss_and_grad(Generator& g, const std::vector<FmBatchItem>& batch,
                        const Eigen::VectorXd& m, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const int sd = g.cfg.state_dim();
  const double dx = kTwoPi / g.cfg.state_n;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const auto& item : batch) {
    double tau = rng.uniform();
    Eigen::VectorXd z = draw_normal(rng, sd);
    Eigen::VectorXd next = flatten(*item.next);

    Tape t(g.params);
    int cond_node = t.input(flatten(*item.cond));
    int m_node = (g.cfg.use_memory && m.size() > 0) ? t.input(m) : -1;
    int u_tau = t.input((1.0 - tau) * z + tau * next);
    int v = vfn_node(t, g, tau, u_tau, cond_node, m_node, item.dt);
    int sq = t.sum_sq(t.sub(v, t.input(next - z)));
    loss += dx * t.value(sq)(0) * inv_b;
    t.backward(sq, dx * inv_b);
  }
  return loss;
}

void TrainConfig::validate() const {
  if (iters < 1 || batch < 1) throw std::invalid_argument("iters and batch must be >= 1");
  if (p_tf < 0.0 || p_tf > 1.0 || p_seq < 0.0 || p_seq > 1.0)
    throw std::invalid_argument("probabilities must lie in [0, 1]");
  if (k_train < 1 || k_eval < 1) throw std::invalid_argument("sampler steps must be >= 1");
  if (lr <= 0.0 || lr_min < 0.0 || lr_min > lr)
    throw std::invalid_argument("learning rates must satisfy 0 < lr_min <= lr");
  if (grad_clip <= 0.0) throw std::invalid_argument("grad_clip must be positive");
  if (restart_period < 1 || restart_mult < 1.0)
    throw std::invalid_argument("restart schedule must be nondecreasing");
  if (window_min < 1 || window_max < window_min)
    throw std::invalid_argument("window bounds must satisfy 1 <= min <= max");
}

std::vector<LossRow> train_mixed(Generator& g, const std::vector<pde::Trajectory>& data,
                                 const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("empty dataset");
  for (const auto& traj : data)
    if (static_cast<int>(traj.leads.size()) < cfg.window_max)
      throw std::invalid_argument("trajectory shorter than training window");

  const int sd = g.cfg.state_dim();
  const double dx = kTwoPi / g.cfg.state_n;
  const bool pipeline_active = cfg.cond.cutoff_j >= 0 || cfg.cond.degraded;
  Eigen::MatrixXd pi;
  if (pipeline_active) pi = cond_pipeline_matrix(g.cfg, cfg.cond);

  Rng rng = RngKey(cfg.seed).derive(1).stream();
  Adam adam(g.params);
  std::vector<LossRow> log;
  log.reserve(cfg.iters);

  for (int iter = 0; iter < cfg.iters; ++iter) {
    bool seq = rng.bernoulli(cfg.p_seq);
    g.params.zero_grads();
    double loss = 0.0;

    if (!seq) {
      std::vector<GridField> conds;
      std::vector<FmBatchItem> batch;
      conds.reserve(cfg.batch);
      batch.reserve(cfg.batch);
      std::vector<std::pair<int, int>> picks;
      for (int b = 0; b < cfg.batch; ++b) {
        int tr = static_cast<int>(rng.below(data.size()));
        int st = static_cast<int>(rng.below(data[tr].leads.size()));
        picks.emplace_back(tr, st);
        conds.push_back(condition(data[tr].snapshots[st], cfg.cond));
      }
      for (int b = 0; b < cfg.batch; ++b) {
        auto [tr, st] = picks[b];
        batch.push_back({&conds[b], &data[tr].snapshots[st + 1], data[tr].leads[st]});
      }
      loss = fm_loss_and_grad(g, batch, Eigen::VectorXd::Zero(g.cfg.d_m), rng);
    } else {
      for (int b = 0; b < cfg.batch; ++b) {
        int tr = static_cast<int>(rng.below(data.size()));
        int w = cfg.window_min +
                static_cast<int>(rng.below(cfg.window_max - cfg.window_min + 1));
        int s = static_cast<int>(rng.below(data[tr].leads.size() - w + 1));
        const auto& traj = data[tr];

        Tape t(g.params);
        FifoBuffer buf(g.cfg.l_max);
        int sq_total = -1;
        int prev_hat = -1;
        for (int i = 0; i < w; ++i) {
          int n = s + i;
          double dt = traj.leads[n];
          bool forced = (i == 0) ? true : rng.bernoulli(cfg.p_tf);
          int cond_node;
          if (forced || prev_hat < 0) {
            cond_node = t.input(flatten(condition(traj.snapshots[n], cfg.cond)));
          } else {
            cond_node = pipeline_active ? t.matvec_const(pi, prev_hat) : prev_hat;
          }
          int m_node = -1, e_node = -1;
          if (g.cfg.use_memory) {
            e_node = encoder_node(t, g, cond_node, dt);
            std::vector<int> inputs;
            for (const auto& e : buf.entries) inputs.push_back(t.input(e));
            inputs.push_back(e_node);
            m_node = ssm_scan_node(t, g, inputs);
          }
          double tau = rng.uniform();
          Eigen::VectorXd z = draw_normal(rng, sd);
          Eigen::VectorXd next = flatten(traj.snapshots[n + 1]);
          int u_tau = t.input((1.0 - tau) * z + tau * next);
          int v = vfn_node(t, g, tau, u_tau, cond_node, m_node, dt);
          int sq = t.sum_sq(t.sub(v, t.input(next - z)));
          sq_total = (sq_total < 0) ? sq : t.add(sq_total, sq);
          if (i < w - 1)
            prev_hat = euler_feedback_node(t, g, cond_node, m_node, dt, cfg.k_train, z);
          if (g.cfg.use_memory) buf.push(t.value(e_node));  // detached copy
        }
        double item_scale = 1.0 / (static_cast<double>(cfg.batch) * w);
        loss += dx * t.value(sq_total)(0) * item_scale;
        t.backward(sq_total, dx * item_scale);
      }
    }

    if (!std::isfinite(loss))
      throw std::runtime_error("non-finite training loss at iteration " + std::to_string(iter));
    double grad_norm = tape::clip_global_norm(g.params, cfg.grad_clip);
    adam.step(g.params, cosine_restart_lr(cfg, iter));
    log.push_back({iter, seq ? "seq" : "a2a", loss, grad_norm});
  }
  return log;
}

GridField sample_next(Generator& g, const GridField& cond, const Eigen::VectorXd& m, double dt,
                      int k_steps, Integrator integrator, Rng& rng) {
  Eigen::VectorXd z = draw_normal(rng, g.cfg.state_dim());
  Eigen::VectorXd cond_flat = flatten(cond);
  VelocityFn field = [&](double tau, const Eigen::VectorXd& u) {
    Tape t(g.params);
    int cond_node = t.input(cond_flat);
    int m_node = (g.cfg.use_memory && m.size() > 0) ? t.input(m) : -1;
    int v = vfn_node(t, g, tau, t.input(u), cond_node, m_node, dt);
    return t.value(v);
  };
  Eigen::VectorXd out = integrate_velocity(field, std::move(z), k_steps, integrator);
  if (!out.allFinite()) throw std::runtime_error("non-finite sampler state");
  return unflatten(out, g.cfg.channels, g.cfg.state_n);
}

Eigen::VectorXd cheap_sampler_feedback(Generator& g, const GridField& cond,
                                       const Eigen::VectorXd& m, double dt, int k_steps,
                                       const Eigen::VectorXd& z) {
  Tape t(g.params);
  int cond_node = t.input(flatten(cond));
  int m_node = (g.cfg.use_memory && m.size() > 0) ? t.input(m) : -1;
  int out = euler_feedback_node(t, g, cond_node, m_node, dt, k_steps, z);
  return t.value(out);
}

RolloutResult rollout(Generator& g, const GridField& u0, const std::vector<double>& schedule,
                      const RolloutFlags& flags, Rng& rng) {
  if (schedule.empty()) throw std::invalid_argument("empty schedule");
  RolloutResult out;
  out.states.push_back(u0);
  FifoBuffer buf(g.cfg.l_max);
  const bool memory_active = g.cfg.use_memory && !flags.memoryless;
  for (double dt : schedule) {
    GridField cond = condition(out.states.back(), flags.cond);
    Eigen::VectorXd m;
    if (memory_active) {
      auto [m_val, e_val] = memory_from_state(g, cond, dt, buf);
      m = m_val;
      buf.push(e_val);  // once per physical step
      ++out.buffer_pushes;
    }
    GridField next = sample_next(g, cond, m, dt, flags.k_steps, flags.integrator, rng);
    out.conditions.push_back(std::move(cond));
    out.states.push_back(std::move(next));
  }
  return out;
}

void save_generator(const Generator& g, const std::string& path) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "generator-checkpoint";
  j["generator"] = {{"state_n", g.cfg.state_n},     {"channels", g.cfg.channels},
                    {"hidden", g.cfg.hidden},       {"d_m", g.cfg.d_m},
                    {"l_max", g.cfg.l_max},         {"time_embed", g.cfg.time_embed},
                    {"film_hidden", g.cfg.film_hidden}, {"use_memory", g.cfg.use_memory}};
  container::Container c;
  c.config_json = j.dump();
  for (const auto& p : g.params.all()) {
    auto& s = c.add(p.name, {static_cast<std::uint64_t>(p.value.rows()),
                             static_cast<std::uint64_t>(p.value.cols())});
    for (int r = 0; r < p.value.rows(); ++r)
      for (int col = 0; col < p.value.cols(); ++col)
        s.data[static_cast<std::size_t>(r) * p.value.cols() + col] = p.value(r, col);
  }
  auto& d = c.add("decay", {static_cast<std::uint64_t>(g.decay.size())});
  for (int i = 0; i < g.decay.size(); ++i) d.data[i] = g.decay(i);
  container::write_container(path, c);
}

Generator load_generator(const std::string& path) {
  container::Container c = container::read_container(path);
  nlohmann::json j = nlohmann::json::parse(c.config_json);
  if (!j.contains("generator")) throw std::runtime_error("not a generator checkpoint");
  const auto& jg = j["generator"];
  GeneratorConfig cfg;
  cfg.state_n = jg.at("state_n").get<int>();
  cfg.channels = jg.at("channels").get<int>();
  cfg.hidden = jg.at("hidden").get<int>();
  cfg.d_m = jg.at("d_m").get<int>();
  cfg.l_max = jg.at("l_max").get<int>();
  cfg.time_embed = jg.at("time_embed").get<int>();
  cfg.film_hidden = jg.at("film_hidden").get<int>();
  cfg.use_memory = jg.at("use_memory").get<bool>();
  cfg.validate();

  Generator g;
  g.cfg = cfg;
  allocate_params(cfg, g.params);
  for (auto& p : g.params.all()) {
    const container::Section* s = c.find(p.name);
    if (s == nullptr) throw std::runtime_error("checkpoint missing parameter: " + p.name);
    if (s->dims.size() != 2 || static_cast<int>(s->dims[0]) != p.value.rows() ||
        static_cast<int>(s->dims[1]) != p.value.cols())
      throw std::runtime_error("checkpoint shape mismatch: " + p.name);
    for (int r = 0; r < p.value.rows(); ++r)
      for (int col = 0; col < p.value.cols(); ++col)
        p.value(r, col) = s->data[static_cast<std::size_t>(r) * p.value.cols() + col];
  }
  const container::Section* d = c.find("decay");
  if (d == nullptr || static_cast<int>(d->element_count()) != cfg.d_m)
    throw std::runtime_error("checkpoint missing decay vector");
  g.decay.resize(cfg.d_m);
  for (int i = 0; i < cfg.d_m; ++i) g.decay(i) = d->data[i];
  return g;
}

}  // namespace mcrf::gen
