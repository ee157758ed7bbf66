#include "sysid/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <utility>

#include "sysid/numerics.hpp"
#include "sysid/random.hpp"

namespace sysid {

WeightSchedule WeightSchedule::constant(double q) {
  if (!(q >= 0.0) || !std::isfinite(q)) throw ConfigError("WeightSchedule: q must be nonnegative");
  WeightSchedule w;
  w.kind = Kind::Constant;
  w.q = q;
  return w;
}

WeightSchedule WeightSchedule::per_step_weights(std::vector<double> desc) {
  if (desc.empty()) throw ConfigError("WeightSchedule: empty per-step weight vector");
  for (double v : desc) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError("WeightSchedule: per-step weights must be nonnegative");
    }
  }
  WeightSchedule w;
  w.kind = Kind::PerStep;
  w.per_step = std::move(desc);
  return w;
}

WeightSchedule WeightSchedule::decaying(double scale) {
  if (!(scale >= 0.0) || !std::isfinite(scale)) {
    throw ConfigError("WeightSchedule: decay scale must be nonnegative");
  }
  WeightSchedule w;
  w.kind = Kind::DecayingSqrt;
  w.scale = scale;
  return w;
}

double WeightSchedule::at(int k, int horizon, int true_count) const {
  if (k < 0 || k >= horizon) throw IndexError("WeightSchedule: time index out of range");
  switch (kind) {
    case Kind::Constant:
      return q;
    case Kind::PerStep:
      if (static_cast<int>(per_step.size()) != horizon) {
        throw ShapeError("WeightSchedule: per-step weight count disagrees with horizon");
      }
      // Stored as (q_{T-1}, ..., q_0).
      return per_step[static_cast<std::size_t>(horizon - 1 - k)];
    case Kind::DecayingSqrt:
      if (true_count < 1) throw ConfigError("WeightSchedule: decaying weight needs N_r >= 1");
      return scale / std::sqrt(static_cast<double>(true_count));
  }
  throw ConfigError("WeightSchedule: unknown kind");
}

std::vector<double> WeightSchedule::resolve(int horizon, int true_count) const {
  std::vector<double> qs(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) qs[static_cast<std::size_t>(k)] = at(k, horizon, true_count);
  return qs;
}

namespace {

// Per-column weights in batch column order: 1 for true-system columns, q_k
// for auxiliary ones.
Vector column_weights(const BatchData& batch, const WeightSchedule& weights) {
  const Index cols = batch.z_mat.cols();
  if (static_cast<Index>(batch.tags.size()) != cols) {
    throw ShapeError("wls: batch tags disagree with column count");
  }
  const std::vector<double> qs = weights.resolve(batch.horizon, batch.true_count);
  Vector w(cols);
  for (Index j = 0; j < cols; ++j) {
    const ColumnTag& tag = batch.tags[static_cast<std::size_t>(j)];
    w(j) = tag.system == 0 ? 1.0 : qs[static_cast<std::size_t>(tag.k)];
  }
  return w;
}

struct WeightedSystem {
  Matrix gram;    // Z Q Z* / max_weight
  Matrix cross;   // X Q Z* / max_weight
  double max_weight = 0.0;
};

WeightedSystem weighted_normal_equations(const Matrix& x_mat, const Matrix& z_mat,
                                         const Vector& col_weights) {
  WeightedSystem sys;
  sys.max_weight = col_weights.size() == 0 ? 0.0 : col_weights.maxCoeff();
  if (!(sys.max_weight > 0.0)) {
    throw SingularGramError("wls: all column weights are zero", 0.0, col_weights.size());
  }
  const Vector scaled = col_weights / sys.max_weight;
  const Matrix zw = z_mat * scaled.asDiagonal();
  sys.gram = zw * z_mat.transpose();
  sys.gram = 0.5 * (sys.gram + sys.gram.transpose()).eval();
  sys.cross = x_mat * scaled.asDiagonal() * z_mat.transpose();
  return sys;
}

}  // namespace

Estimate wls(const BatchData& batch, const WeightSchedule& weights, const WlsOptions& opts) {
  const Index n = batch.x_mat.rows();
  const Index np = batch.z_mat.rows();
  if (n < 1 || np < n || batch.x_mat.cols() != batch.z_mat.cols()) {
    throw ShapeError("wls: inconsistent batch matrices");
  }

  const Vector w = column_weights(batch, weights);
  WeightedSystem sys = weighted_normal_equations(batch.x_mat, batch.z_mat, w);

  Matrix theta;
  try {
    theta = solve_spd(sys.gram, sys.cross.transpose()).transpose();
  } catch (const SingularGramError& e) {
    if (!opts.ridge_fallback) {
      throw SingularGramError("wls: weighted Gram singular at tolerance (min eig " +
                                  std::to_string(e.min_eig() * sys.max_weight) + ", " +
                                  std::to_string(batch.z_mat.cols()) + " columns)",
                              e.min_eig() * sys.max_weight, batch.z_mat.cols());
    }
    Matrix ridged = sys.gram;
    ridged.diagonal().array() += 1e-8 * spectral_norm(sys.gram);
    Eigen::LLT<Matrix> llt(ridged);
    if (llt.info() != Eigen::Success) {
      throw SingularGramError("wls: ridge fallback failed", e.min_eig() * sys.max_weight,
                              batch.z_mat.cols());
    }
    theta = llt.solve(sys.cross.transpose()).transpose();
  }

  Estimate est;
  est.theta = std::move(theta);
  est.a_hat = est.theta.leftCols(n);
  est.b_hat = est.theta.rightCols(np - n);
  est.gram = sys.gram * sys.max_weight;
  est.gram_min_eig = min_eig_sym(sys.gram) * sys.max_weight;
  return est;
}

std::pair<Matrix, Matrix> error_decomposition(const BatchData& batch, const WeightSchedule& weights,
                                              const Estimate& est, const Matrix& true_theta) {
  if (true_theta.rows() != est.theta.rows() || true_theta.cols() != est.theta.cols()) {
    throw ShapeError("error_decomposition: true_theta dimensions disagree with estimate");
  }
  const Vector w = column_weights(batch, weights);
  const WeightedSystem sys = weighted_normal_equations(batch.x_mat, batch.z_mat, w);
  const Vector scaled = w / sys.max_weight;

  const Matrix noise_cross = batch.w_mat * scaled.asDiagonal() * batch.z_mat.transpose();
  const Matrix bias_cross = batch.delta_mat * scaled.asDiagonal() * batch.z_mat.transpose();
  Matrix noise_term = solve_spd(sys.gram, noise_cross.transpose()).transpose();
  Matrix bias_term = solve_spd(sys.gram, bias_cross.transpose()).transpose();
  return {std::move(noise_term), std::move(bias_term)};
}

ErrorMetrics error_metrics(const Estimate& est, const Matrix& true_theta) {
  if (true_theta.rows() != est.theta.rows() || true_theta.cols() != est.theta.cols()) {
    throw ShapeError("error_metrics: dimension mismatch");
  }
  const Index n = est.a_hat.cols();
  const Matrix err = est.theta - true_theta;
  ErrorMetrics m;
  m.err_theta = err.isZero(0.0) ? 0.0 : spectral_norm(err);
  const Matrix err_a = err.leftCols(n);
  const Matrix err_b = err.rightCols(err.cols() - n);
  m.err_a = err_a.isZero(0.0) ? 0.0 : spectral_norm(err_a);
  m.err_b = err_b.size() == 0 || err_b.isZero(0.0) ? 0.0 : spectral_norm(err_b);
  return m;
}

namespace {

// Accumulated normal equations for a plain column list; used by the
// cross-validation path, which never needs the batch bookkeeping.
struct CvColumns {
  std::vector<Vector> z;
  std::vector<Vector> y;  // successor states
};

void append_rollout_columns(CvColumns& cols, const Rollout& r) {
  const Index n = r.states.rows();
  const Index p = r.inputs.rows();
  const int horizon = static_cast<int>(r.inputs.cols());
  for (int k = 0; k < horizon; ++k) {
    Vector z(n + p);
    z.head(n) = r.states.col(k);
    z.tail(p) = r.inputs.col(k);
    cols.z.push_back(std::move(z));
    cols.y.push_back(r.states.col(k + 1));
  }
}

}  // namespace

double select_weight_cv(const std::vector<Rollout>& true_rollouts,
                        const std::vector<Rollout>& aux_rollouts,
                        const std::vector<double>& candidate_qs, int folds, std::uint64_t seed) {
  if (true_rollouts.size() < 2) throw ConfigError("select_weight_cv: need at least 2 true rollouts");
  if (folds < 2) throw ConfigError("select_weight_cv: need at least 2 folds");
  if (candidate_qs.empty()) throw ConfigError("select_weight_cv: empty candidate list");
  if (static_cast<int>(true_rollouts.size()) < folds) {
    throw ConfigError("select_weight_cv: fewer true rollouts than folds");
  }
  for (double q : candidate_qs) {
    if (!(q >= 0.0) || !std::isfinite(q)) {
      throw ConfigError("select_weight_cv: candidates must be nonnegative");
    }
  }

  const std::size_t n_true = true_rollouts.size();
  // Deterministic Fisher-Yates shuffle, then round-robin fold assignment.
  std::vector<int> order(n_true);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 engine(mix_seed(seed, 0));
  for (std::size_t i = 0; i + 1 < n_true; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(engine() % (n_true - i));
    std::swap(order[i], order[j]);
  }
  std::vector<int> fold_of(n_true);
  for (std::size_t i = 0; i < n_true; ++i) {
    fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(folds));
  }

  CvColumns aux_cols;
  for (const Rollout& r : aux_rollouts) append_rollout_columns(aux_cols, r);

  const Index n = true_rollouts.front().states.rows();
  const Index p = true_rollouts.front().inputs.rows();
  const Index d = n + p;

  double best_q = 0.0;
  double best_score = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (double q : candidate_qs) {
    double fold_score_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      CvColumns train;
      CvColumns test;
      for (std::size_t i = 0; i < n_true; ++i) {
        append_rollout_columns(fold_of[i] == f ? test : train, true_rollouts[i]);
      }

      // No max-weight renormalization here: the solve tolerance is relative,
      // and unscaled sums keep candidates with identical fits (e.g. when
      // there is no auxiliary data) bitwise equal, so score ties are exact.
      Matrix gram = Matrix::Zero(d, d);
      Matrix cross = Matrix::Zero(n, d);
      for (std::size_t j = 0; j < train.z.size(); ++j) {
        gram.noalias() += train.z[j] * train.z[j].transpose();
        cross.noalias() += train.y[j] * train.z[j].transpose();
      }
      for (std::size_t j = 0; j < aux_cols.z.size(); ++j) {
        gram.noalias() += q * aux_cols.z[j] * aux_cols.z[j].transpose();
        cross.noalias() += q * aux_cols.y[j] * aux_cols.z[j].transpose();
      }
      gram = 0.5 * (gram + gram.transpose()).eval();
      const Matrix theta = solve_spd(gram, cross.transpose()).transpose();

      double sq_sum = 0.0;
      for (std::size_t j = 0; j < test.z.size(); ++j) {
        sq_sum += (test.y[j] - theta * test.z[j]).squaredNorm();
      }
      fold_score_sum += sq_sum / static_cast<double>(test.z.size());
    }
    const double score = fold_score_sum / static_cast<double>(folds);
    if (!have_best || score < best_score || (score == best_score && q < best_q)) {
      have_best = true;
      best_score = score;
      best_q = q;
    }
  }
  return best_q;
}

}  // namespace sysid
