#pragma once

#include <vector>

#include "sysid/estimator.hpp"
#include "sysid/simulate.hpp"
#include "sysid/systems.hpp"
#include "sysid/types.hpp"

namespace sysid {

// Everything the finite-sample error bounds consume. sigma_w_true/aux are
// noise standard deviations; the covariance lists hold the analytic per-step
// regressor covariances for k = 0..T-1. delta must lie in (0, 1/4) so the
// reported confidence 1 - 4 delta is positive.
struct BoundInputs {
  int n = 0;
  int p = 0;
  int horizon = 0;
  int true_count = 0;  // N_r
  int aux_count = 0;   // N_p
  double delta = 0.05;
  double sigma_w_true = 0.0;
  double sigma_w_aux = 0.0;
  WeightSchedule weights;
  std::vector<Matrix> true_covs;
  std::vector<Matrix> aux_covs;
  ModelDelta deltas;

  static BoundInputs from_models(const SystemModel& true_model, const SystemModel& aux_model,
                                 int true_count, int aux_count, double delta,
                                 WeightSchedule weights);
};

struct Thresholds {
  double n0 = 0.0;  // 8(n+p) + 16 log(2T/delta)
  double n1 = 0.0;  // (4n+2p) log(T/delta)
};

// Sample-size thresholds under which the concentration results hold.
// Natural logarithms; callers compare rollout counts with >=.
Thresholds thresholds(int n, int p, int horizon, double delta);

struct BoundResult {
  double noise_term = 0.0;
  double bias_term = 0.0;
  double total = 0.0;
  double confidence = 0.0;  // 1 - 4 delta
  bool thresholds_met = false;
  Thresholds thr;
};

// Two-term high-probability bound on max(||A_wls - A||, ||B_wls - B||). When
// the thresholds are unmet the bound is still evaluated and thresholds_met
// reports the violation, which keeps bound curves plottable across N sweeps.
BoundResult error_bound(const BoundInputs& inputs);

// Constant-weight specialization with its named constants. Requires a
// schedule that resolves to a single q; agrees with error_bound to
// floating-point roundoff.
struct ConstantWeightBound {
  BoundResult bound;
  double c0 = 0.0;
  double c1 = 0.0;  // 9 sum ||aux cov||
  double c2 = 0.0;  // sum ||true cov^(1/2)||
  double c3 = 0.0;  // sum ||aux cov^(1/2)||
  Matrix m1;        // sum of true covs
  Matrix m2;        // sum of aux covs
};

ConstantWeightBound constant_weight_bound(const BoundInputs& inputs);

// Sufficient condition for any nonzero constant weight to shrink the bound:
//   sigma_wt c2 / (sqrt(N_r) lmin(M1)) >
//   sigma_wa c3 / (sqrt(N_p) lmin(M2)) + ||delta_Theta|| c1 / (lmin(M2) c0).
struct BenefitCondition {
  bool holds = false;
  double lhs = 0.0;
  double rhs = 0.0;
};

BenefitCondition aux_benefit_condition(const BoundInputs& inputs);

// One concentration inequality evaluated on a concrete batch. For the Gram
// orderings (comparison >=) `empirical` is the minimum eigenvalue of
// LHS - RHS and `bound` is 0; for the cross-term norms (comparison <=) the
// fields hold the two sides directly.
struct ConcentrationCheck {
  double empirical = 0.0;
  double bound = 0.0;
  bool holds = false;
};

struct ConcentrationTerms {
  ConcentrationCheck aux_gram;     // aux weighted Gram vs (N_p/4) sum q_k aux_cov_k
  ConcentrationCheck bias_cross;   // ||Delta Q Z*|| vs (9 N_p/4) sum q_k ||delta_k|| ||aux_cov_k||
  ConcentrationCheck true_gram;    // true Gram vs (N_r/4) sum true_cov_k
  ConcentrationCheck aux_noise;    // ||W_aux Q Z_aux*|| vs its concentration bound
  ConcentrationCheck true_noise;   // ||W_true Z_true*|| vs its concentration bound
};

// Empirical-vs-theoretical sides of the four concentration inequalities for
// one batch; the batch must carry recorded noise and match the inputs'
// dimensions and rollout counts.
ConcentrationTerms concentration_terms(const BatchData& batch, const BoundInputs& inputs);

}  // namespace sysid
