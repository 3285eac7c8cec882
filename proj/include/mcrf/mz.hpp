#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mcrf::mz {

// Linear flow du/dt = F u observed through linear functionals u -> c^T u.
// The generator acts on coefficient vectors as L = F^T; the resolved
// projection keeps a coordinate subset of the coefficients.
struct LinearObservableSystem {
  Eigen::MatrixXd f;                // state matrix, n x n
  std::vector<int> resolved_mask;   // 0/1 per coordinate

  void validate() const;
  Eigen::MatrixXd liouville() const;   // L = F^T
  Eigen::MatrixXd projector() const;   // P = diag(mask)
};

// Operator-norm defect of the Duhamel splitting
//   e^{tL} = e^{tQL} + int_0^t e^{(t-s)L} P L e^{sQL} ds
// with the integral evaluated by composite Simpson on quad_nodes points
// (odd count). Matrix exponentials are scaling-and-squaring Pade.
double dyson_residual(const LinearObservableSystem& sys, double t, int quad_nodes);

// Operator-norm defect of the memory decomposition of d/dt P e^{tL}
// (Markov term + memory integral + orthogonal forcing), with the
// derivative taken analytically as P e^{tL} L.
double mz_residual(const LinearObservableSystem& sys, double t, int quad_nodes);

// Discrete state-space kernel m_n = C h_n, h_{n+1} = A h_n + B e_n.
struct SSMKernel {
  Eigen::MatrixXd a;  // state x state
  Eigen::MatrixXd b;  // state x input
  Eigen::MatrixXd c;  // output x state
};

// Max output difference between the convolution evaluation
// m_n = sum_{k=1}^{n} C A^{k-1} B e_{n-k} and the recurrence.
double ssm_memory_equivalence(const SSMKernel& kernel,
                              const std::vector<Eigen::VectorXd>& inputs,
                              std::vector<Eigen::VectorXd>* recurrence_out = nullptr);

}  // namespace mcrf::mz
