#include "mcrf/tape.hpp"

#include <cmath>

namespace mcrf::tape {

Eigen::MatrixXd& ParamStore::add(const std::string& name, int rows, int cols) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  Param p;
  p.name = name;
  p.value = Eigen::MatrixXd::Zero(rows, cols);
  p.grad = Eigen::MatrixXd::Zero(rows, cols);
  index_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back().value;
}

Param& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return params_[it->second];
}

const Param& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("unknown parameter: " + name);
  return params_[it->second];
}

void ParamStore::zero_grads() {
  for (auto& p : params_) p.grad.setZero();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& p : params_) sq += p.grad.squaredNorm();
  return std::sqrt(sq);
}

void ParamStore::scale_grads(double s) {
  for (auto& p : params_) p.grad *= s;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

double clip_global_norm(ParamStore& store, double max_norm) {
  double norm = store.grad_norm();
  if (norm > max_norm && norm > 0.0) store.scale_grads(max_norm / norm);
  return norm;
}

int Tape::push(Eigen::VectorXd value) {
  Node n;
  n.value = std::move(value);
  n.adjoint = Eigen::VectorXd::Zero(n.value.size());
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(Eigen::VectorXd v) { return push(std::move(v)); }

int Tape::dense(const std::string& w, const std::string& b, int x) {
  Param& pw = store_.at(w);
  Param& pb = store_.at(b);
  if (pw.value.cols() != nodes_[x].value.size() || pw.value.rows() != pb.value.rows() ||
      pb.value.cols() != 1)
    throw std::invalid_argument("dense shape mismatch at " + w);
  int out = push(pw.value * nodes_[x].value + pb.value.col(0));
  nodes_[out].back = [this, &pw, &pb, x, out] {
    const Eigen::VectorXd& g = adj(out);
    pw.grad.noalias() += g * nodes_[x].value.transpose();
    pb.grad.col(0) += g;
    adj(x).noalias() += pw.value.transpose() * g;
  };
  return out;
}

int Tape::matvec(const std::string& w, int x) {
  Param& pw = store_.at(w);
  if (pw.value.cols() != nodes_[x].value.size())
    throw std::invalid_argument("matvec shape mismatch at " + w);
  int out = push(pw.value * nodes_[x].value);
  nodes_[out].back = [this, &pw, x, out] {
    const Eigen::VectorXd& g = adj(out);
    pw.grad.noalias() += g * nodes_[x].value.transpose();
    adj(x).noalias() += pw.value.transpose() * g;
  };
  return out;
}

int Tape::matvec_const(const Eigen::MatrixXd& m, int x) {
  if (m.cols() != nodes_[x].value.size())
    throw std::invalid_argument("matvec_const shape mismatch");
  int out = push(m * nodes_[x].value);
  Eigen::MatrixXd mt = m.transpose();
  nodes_[out].back = [this, mt = std::move(mt), x, out] {
    adj(x).noalias() += mt * adj(out);
  };
  return out;
}

int Tape::add(int a, int b) {
  if (nodes_[a].value.size() != nodes_[b].value.size())
    throw std::invalid_argument("add shape mismatch");
  int out = push(nodes_[a].value + nodes_[b].value);
  nodes_[out].back = [this, a, b, out] {
    adj(a) += adj(out);
    adj(b) += adj(out);
  };
  return out;
}

int Tape::sub(int a, int b) {
  if (nodes_[a].value.size() != nodes_[b].value.size())
    throw std::invalid_argument("sub shape mismatch");
  int out = push(nodes_[a].value - nodes_[b].value);
  nodes_[out].back = [this, a, b, out] {
    adj(a) += adj(out);
    adj(b) -= adj(out);
  };
  return out;
}

int Tape::scale(int a, double s) {
  int out = push(s * nodes_[a].value);
  nodes_[out].back = [this, a, s, out] { adj(a) += s * adj(out); };
  return out;
}

int Tape::cmul(int a, int b) {
  if (nodes_[a].value.size() != nodes_[b].value.size())
    throw std::invalid_argument("cmul shape mismatch");
  int out = push(nodes_[a].value.cwiseProduct(nodes_[b].value));
  nodes_[out].back = [this, a, b, out] {
    adj(a).array() += adj(out).array() * nodes_[b].value.array();
    adj(b).array() += adj(out).array() * nodes_[a].value.array();
  };
  return out;
}

int Tape::cmul_const(int a, const Eigen::VectorXd& c) {
  if (c.size() != nodes_[a].value.size())
    throw std::invalid_argument("cmul_const shape mismatch");
  int out = push(nodes_[a].value.cwiseProduct(c));
  Eigen::VectorXd cc = c;
  nodes_[out].back = [this, a, cc = std::move(cc), out] {
    adj(a).array() += adj(out).array() * cc.array();
  };
  return out;
}

int Tape::gelu(int a) {
  Eigen::ArrayXd x = nodes_[a].value.array();
  Eigen::ArrayXd s = 1.0 / (1.0 + (-1.702 * x).exp());
  int out = push((x * s).matrix());
  Eigen::VectorXd deriv = (s + 1.702 * x * s * (1.0 - s)).matrix();
  nodes_[out].back = [this, a, deriv = std::move(deriv), out] {
    adj(a).array() += adj(out).array() * deriv.array();
  };
  return out;
}

int Tape::sigmoid(int a) {
  Eigen::ArrayXd s = 1.0 / (1.0 + (-nodes_[a].value.array()).exp());
  int out = push(s.matrix());
  nodes_[out].back = [this, a, out] {
    const Eigen::ArrayXd& y = nodes_[out].value.array();
    adj(a).array() += adj(out).array() * y * (1.0 - y);
  };
  return out;
}

int Tape::concat(int a, int b) {
  Eigen::VectorXd v(nodes_[a].value.size() + nodes_[b].value.size());
  v << nodes_[a].value, nodes_[b].value;
  int out = push(std::move(v));
  nodes_[out].back = [this, a, b, out] {
    int na = static_cast<int>(nodes_[a].value.size());
    int nb = static_cast<int>(nodes_[b].value.size());
    adj(a) += adj(out).head(na);
    adj(b) += adj(out).tail(nb);
  };
  return out;
}

int Tape::slice(int a, int start, int len) {
  if (start < 0 || len < 1 || start + len > nodes_[a].value.size())
    throw std::invalid_argument("slice out of range");
  int out = push(nodes_[a].value.segment(start, len));
  nodes_[out].back = [this, a, start, len, out] {
    adj(a).segment(start, len) += adj(out);
  };
  return out;
}

int Tape::layernorm(int a) {
  constexpr double eps = 1e-5;
  const Eigen::VectorXd& x = nodes_[a].value;
  double mu = x.mean();
  double var = (x.array() - mu).square().mean();
  double sigma = std::sqrt(var + eps);
  int out = push(((x.array() - mu) / sigma).matrix());
  nodes_[out].back = [this, a, sigma, out] {
    const Eigen::ArrayXd& g = adj(out).array();
    const Eigen::ArrayXd& y = nodes_[out].value.array();
    double gm = g.mean();
    double gym = (g * y).mean();
    adj(a).array() += (g - gm - y * gym) / sigma;
  };
  return out;
}

int Tape::sum_sq(int a) {
  Eigen::VectorXd v(1);
  v(0) = nodes_[a].value.squaredNorm();
  int out = push(std::move(v));
  nodes_[out].back = [this, a, out] {
    adj(a) += 2.0 * adj(out)(0) * nodes_[a].value;
  };
  return out;
}

void Tape::backward(int id, double seed) {
  if (nodes_.at(id).value.size() != 1)
    throw std::invalid_argument("backward target must be scalar");
  adj(id)(0) = seed;
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
}

void Tape::clear() { nodes_.clear(); }

}  // namespace mcrf::tape
