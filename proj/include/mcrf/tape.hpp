#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mcrf::tape {

struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
};

// Named parameter tensors with accumulated gradients. Insertion order is the
// canonical iteration order, so seeded initialization is reproducible.
class ParamStore {
 public:
  Eigen::MatrixXd& add(const std::string& name, int rows, int cols);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::deque<Param>& all() { return params_; }
  const std::deque<Param>& all() const { return params_; }

  void zero_grads();
  double grad_norm() const;      // global l2 across every tensor
  void scale_grads(double s);
  std::size_t scalar_count() const;

 private:
  std::deque<Param> params_;  // deque keeps references stable across add()
  std::unordered_map<std::string, std::size_t> index_;
};

// if the global gradient norm exceeds max_norm, rescale to match it;
// returns the pre-clip norm
double clip_global_norm(ParamStore& store, double max_norm);

// Reverse-mode tape over vector-valued nodes. One tape per batch item; the
// backward pass accumulates parameter gradients into the bound ParamStore.
class Tape {
 public:
  explicit Tape(ParamStore& store) : store_(store) {}

  int input(Eigen::VectorXd v);                     // leaf, no gradient
  int dense(const std::string& w, const std::string& b, int x);  // W x + b
  int matvec(const std::string& w, int x);          // W x
  int matvec_const(const Eigen::MatrixXd& m, int x);
  int add(int a, int b);
  int sub(int a, int b);
  int scale(int a, double s);
  int cmul(int a, int b);                           // elementwise
  int cmul_const(int a, const Eigen::VectorXd& c);
  int gelu(int a);                                  // x * sigmoid(1.702 x)
  int sigmoid(int a);
  int concat(int a, int b);
  int slice(int a, int start, int len);
  int layernorm(int a);                             // no affine, eps 1e-5
  int sum_sq(int a);                                // size-1 node

  const Eigen::VectorXd& value(int id) const { return nodes_.at(id).value; }
  int size() const { return static_cast<int>(nodes_.size()); }

  // id must be a size-1 node; runs every recorded closure in reverse
  void backward(int id, double seed);

  void clear();

 private:
  struct Node {
    Eigen::VectorXd value;
    Eigen::VectorXd adjoint;
    std::function<void()> back;  // empty for leaves
  };

  int push(Eigen::VectorXd value);
  Eigen::VectorXd& adj(int id) { return nodes_[id].adjoint; }

  ParamStore& store_;
  std::vector<Node> nodes_;
};

}  // namespace mcrf::tape
