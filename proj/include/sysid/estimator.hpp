#pragma once

#include <cstdint>
#include <vector>

#include "sysid/simulate.hpp"
#include "sysid/types.hpp"

namespace sysid {

// Relative weight q_k applied to auxiliary-system columns at time step k
// (true-system columns always carry weight 1).
struct WeightSchedule {
  enum class Kind { Constant, PerStep, DecayingSqrt };

  Kind kind = Kind::Constant;
  double q = 0.0;                 // Constant
  std::vector<double> per_step;   // PerStep, stored as (q_{T-1}, ..., q_0)
  double scale = 1.0;             // DecayingSqrt: q = scale / sqrt(N_r)

  static WeightSchedule constant(double q);
  // `desc` ordered (q_{T-1}, ..., q_0), matching the diagonal of the
  // per-rollout weight block.
  static WeightSchedule per_step_weights(std::vector<double> desc);
  static WeightSchedule decaying(double scale);

  // q_k for time index k given the horizon and the true-rollout count.
  double at(int k, int horizon, int true_count) const;
  std::vector<double> resolve(int horizon, int true_count) const;  // indexed by k
};

struct Estimate {
  Matrix theta;           // n x (n+p)
  Matrix a_hat;           // first n columns
  Matrix b_hat;           // last p columns
  Matrix gram;            // Z Q Z*
  double gram_min_eig = 0.0;
};

struct WlsOptions {
  // Opt-in fallback for a singular weighted Gram: solve with
  // Z Q Z* + lambda I, lambda = 1e-8 * spectral_norm. Off by default so that
  // coverage experiments are never silently regularized.
  bool ridge_fallback = false;
};

// Weighted least squares estimate X Q Z* (Z Q Z*)^{-1}. The weighted system
// is renormalized by 1/max-weight before solving (the estimate is invariant
// to a global weight scale), so extreme weights such as q = 1e10 behave as
// "ignore the true data" instead of overflowing.
Estimate wls(const BatchData& batch, const WeightSchedule& weights, const WlsOptions& opts = {});

// The two error components W Q Z* (Z Q Z*)^{-1} and Delta Q Z* (Z Q Z*)^{-1};
// their sum equals wls(batch, weights).theta - true_theta.
std::pair<Matrix, Matrix> error_decomposition(const BatchData& batch, const WeightSchedule& weights,
                                              const Estimate& est, const Matrix& true_theta);

struct ErrorMetrics {
  double err_theta = 0.0;
  double err_a = 0.0;
  double err_b = 0.0;
};

ErrorMetrics error_metrics(const Estimate& est, const Matrix& true_theta);

// Cross-validated constant-weight selection. True rollouts are partitioned
// into `folds` folds (deterministic shuffle from `seed`); each candidate q is
// fit on all auxiliary rollouts plus the training folds and scored by mean
// squared one-step prediction error on the held-out true rollouts. Returns
// the candidate with the smallest mean score, ties broken toward smaller q.
double select_weight_cv(const std::vector<Rollout>& true_rollouts,
                        const std::vector<Rollout>& aux_rollouts,
                        const std::vector<double>& candidate_qs, int folds, std::uint64_t seed);

}  // namespace sysid
