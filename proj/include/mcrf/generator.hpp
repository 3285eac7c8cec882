#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mcrf/grid.hpp"
#include "mcrf/pde_bench.hpp"
#include "mcrf/rng.hpp"
#include "mcrf/tape.hpp"

namespace mcrf::gen {

struct GeneratorConfig {
  int state_n = 128;
  int channels = 1;
  int hidden = 256;      // width of both hidden layers of the vector field
  int d_m = 128;         // embedding / memory dimension
  int l_max = 16;        // FIFO capacity
  int time_embed = 16;   // sinusoidal feature count per embedded scalar
  int film_hidden = 64;
  bool use_memory = true;

  void validate() const;
  int state_dim() const { return channels * state_n; }
};

// FIFO of detached step embeddings, newest at the back
struct FifoBuffer {
  std::deque<Eigen::VectorXd> entries;
  int l_max = 16;

  explicit FifoBuffer(int cap = 16) : l_max(cap) {}
  void push(Eigen::VectorXd e);
  int size() const { return static_cast<int>(entries.size()); }
};

struct Generator {
  GeneratorConfig cfg;
  tape::ParamStore params;
  Eigen::VectorXd decay;  // fixed SSM decays, geometric from 0.5 to 0.999

  static Generator init(const GeneratorConfig& cfg, std::uint64_t seed);
};

enum class Integrator { euler, heun };
Integrator integrator_from_string(const std::string& name);

using VelocityFn = std::function<Eigen::VectorXd(double, const Eigen::VectorXd&)>;

// integrates d/dtau u = v(tau, u) from tau 0 to 1 on the uniform K-grid;
// Heun averages the two stage velocities per step
Eigen::VectorXd integrate_velocity(const VelocityFn& v, Eigen::VectorXd state, int k_steps,
                                   Integrator integrator);

// conditioning pipeline: sharp low-pass at 2^J (off when cutoff_j < 0), then
// optional pooled-and-upsampled degradation
struct CondPipeline {
  int cutoff_j = -1;
  bool degraded = false;
};
GridField condition(const GridField& state, const CondPipeline& pipe);

Eigen::VectorXd flatten(const GridField& u);
GridField unflatten(const Eigen::VectorXd& v, int channels, int n);

// encoder + padded SSM scan + readout over buffer entries plus the fresh
// embedding; returns (m, e) and leaves the buffer untouched
std::pair<Eigen::VectorXd, Eigen::VectorXd> memory_from_state(Generator& g, const GridField& cond,
                                                              double dt,
                                                              const FifoBuffer& buffer);

// v_theta(tau, u_tau; cond, m, dt); an empty m (or use_memory = false) skips
// the fusion stage entirely
GridField fused_vector_field(Generator& g, double tau, const GridField& u_tau,
                             const GridField& cond, const Eigen::VectorXd& m, double dt);

struct FmBatchItem {
  const GridField* cond;
  const GridField* next;
  double dt;
};

// mean grid-l2 flow-matching loss over the batch; accumulates parameter
// gradients (caller zeroes them). Per item the draw order is tau, then the
// base sample z.
double fm_loss_and_grad(Generator& g, const std::vector<FmBatchItem>& batch,
                        const Eigen::VectorXd& m, Rng& rng);

struct TrainConfig {
  int iters = 400;
  int batch = 16;
  double lr = 3e-4;
  double lr_min = 1e-5;
  int restart_period = 400;
  double restart_mult = 2.0;
  double p_tf = 0.8;
  double p_seq = 0.5;
  int k_train = 1;
  int k_eval = 6;
  double grad_clip = 1.0;
  int window_min = 3;
  int window_max = 5;
  CondPipeline cond;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossRow {
  int iter;
  std::string mode;  // "a2a" or "seq"
  double loss;
  double grad_norm;  // pre-clip global norm
};

// mixed A2A / teacher-forced sequence training with Adam, cosine restarts,
// and global-norm clipping; deterministic given cfg.seed
std::vector<LossRow> train_mixed(Generator& g, const std::vector<pde::Trajectory>& data,
                                 const TrainConfig& cfg);

// draws the base sample internally (one normal per state coordinate), then
// integrates the learned field
GridField sample_next(Generator& g, const GridField& cond, const Eigen::VectorXd& m, double dt,
                      int k_steps, Integrator integrator, Rng& rng);

// the Euler feedback path used inside sequence training, evaluated for an
// explicit base sample; matches sample_next's euler branch bitwise
Eigen::VectorXd cheap_sampler_feedback(Generator& g, const GridField& cond,
                                       const Eigen::VectorXd& m, double dt, int k_steps,
                                       const Eigen::VectorXd& z);

struct RolloutFlags {
  bool memoryless = false;  // skip the memory pathway and fusion stage
  CondPipeline cond;
  int k_steps = 6;
  Integrator integrator = Integrator::euler;
};

struct RolloutResult {
  std::vector<GridField> states;      // schedule.size() + 1 entries, u0 first
  std::vector<GridField> conditions;  // conditioning actually used per step
  int buffer_pushes = 0;
};

RolloutResult rollout(Generator& g, const GridField& u0, const std::vector<double>& schedule,
                      const RolloutFlags& flags, Rng& rng);

void save_generator(const Generator& g, const std::string& path);
Generator load_generator(const std::string& path);

}  // namespace mcrf::gen
