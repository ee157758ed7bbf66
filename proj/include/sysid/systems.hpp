#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sysid/types.hpp"

namespace sysid {

// Linear state-space model x_{k+1} = A_k x_k + B_k u_k + w_k with
//   u_k ~ N(0, sigma_u2 I_p), w_k ~ N(0, sigma_w2 I_n), x_0 ~ N(0, sigma_x2 I_n).
// A time-invariant model stores one (A, B) pair; a time-varying model stores
// at least `horizon` pairs. No stability check is made: unstable dynamics are
// legal and may overflow for long horizons.
struct SystemModel {
  std::vector<Matrix> a_seq;
  std::vector<Matrix> b_seq;
  bool time_invariant = true;
  double sigma_u2 = 1.0;
  double sigma_w2 = 0.0;
  double sigma_x2 = 0.0;
  int horizon = 1;

  static SystemModel lti(Matrix a, Matrix b, double sigma_u2, double sigma_w2,
                         double sigma_x2, int horizon);
  static SystemModel ltv(std::vector<Matrix> a_seq, std::vector<Matrix> b_seq,
                         double sigma_u2, double sigma_w2, double sigma_x2, int horizon);

  Index state_dim() const { return a_seq.front().rows(); }
  Index input_dim() const { return b_seq.front().cols(); }

  const Matrix& a(int k) const;
  const Matrix& b(int k) const;
};

// Per-step spectral norms of [A_aux_k - A_true | B_aux_k - B_true].
struct ModelDelta {
  std::vector<double> per_step;
  double worst = 0.0;
};

// State-transition product A_{k-1} A_{k-2} ... A_l; identity when k == l.
Matrix transition(const SystemModel& model, int k, int l);

// Input/noise response blocks, zero-width for k == 1:
//   G_k = [Phi(k-1,1) B_0, Phi(k-1,2) B_1, ..., B_{k-2}]  (n x (k-1)p)
//   F_k = [Phi(k-1,1),     Phi(k-1,2),     ..., I_n]      (n x (k-1)n)
std::pair<Matrix, Matrix> gf_matrices(const SystemModel& model, int k);

// Exact covariance of the stacked regressor z_k = [x_k; u_k]:
// block diag( sigma_u2 G G* + sigma_w2 F F* + sigma_x2 Phi(k,0) Phi(k,0)*,
//             sigma_u2 I_p ), with (G, F) = gf_matrices(k+1).
// Symmetric PSD; positive definite when sigma_x2 > 0 and sigma_u2 > 0.
Matrix step_covariance(const SystemModel& model, int k);

ModelDelta delta_norms(const SystemModel& true_model, const SystemModel& aux_model);

// [A B] horizontal concatenation (step-0 matrices for a time-varying model).
Matrix theta_matrix(const SystemModel& model);

// JSON document with keys n, p, T, A, B, sigma_u2, sigma_w2, sigma_x2.
// A and B are row-major nested arrays, or arrays of such matrices for
// time-varying models. Round-trips decimal inputs losslessly.
SystemModel load_model(const std::string& path);
void save_model(const SystemModel& model, const std::string& path);

}  // namespace sysid
