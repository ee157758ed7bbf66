#include "sysid/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "sysid/numerics.hpp"

namespace sysid {

namespace {

void validate_inputs(const BoundInputs& in) {
  if (in.n < 1 || in.p < 0 || in.horizon < 1) throw ShapeError("bounds: invalid dimensions");
  if (in.true_count < 0 || in.aux_count < 0) throw ShapeError("bounds: negative rollout counts");
  if (!(in.delta > 0.0) || !(in.delta < 0.25)) {
    throw DomainError("bounds: delta must lie in (0, 1/4)");
  }
  if (in.sigma_w_true < 0.0 || in.sigma_w_aux < 0.0) {
    throw ShapeError("bounds: noise standard deviations must be nonnegative");
  }
  const Index d = in.n + in.p;
  if (static_cast<int>(in.true_covs.size()) != in.horizon ||
      static_cast<int>(in.aux_covs.size()) != in.horizon) {
    throw ShapeError("bounds: covariance lists must have one entry per time step");
  }
  for (const auto* list : {&in.true_covs, &in.aux_covs}) {
    for (const Matrix& s : *list) {
      if (s.rows() != d || s.cols() != d) throw ShapeError("bounds: covariance dimension mismatch");
      if (min_eig_sym(s) < -1e-10 * std::max(1.0, spectral_norm(s))) {
        throw ShapeError("bounds: covariance not positive semidefinite");
      }
    }
  }
  if (static_cast<int>(in.deltas.per_step.size()) != in.horizon) {
    throw ShapeError("bounds: delta-norm list must have one entry per time step");
  }
}

double sqrt_spectral_norm(const Matrix& s) { return std::sqrt(spectral_norm(s)); }

double c0_constant(int n, int p, int horizon, double delta) {
  return 16.0 * std::sqrt((2.0 * n + p) * std::log(9.0 * horizon / delta));
}

}  // namespace

BoundInputs BoundInputs::from_models(const SystemModel& true_model, const SystemModel& aux_model,
                                     int true_count, int aux_count, double delta,
                                     WeightSchedule weights) {
  BoundInputs in;
  in.n = static_cast<int>(true_model.state_dim());
  in.p = static_cast<int>(true_model.input_dim());
  in.horizon = true_model.horizon;
  in.true_count = true_count;
  in.aux_count = aux_count;
  in.delta = delta;
  in.sigma_w_true = std::sqrt(true_model.sigma_w2);
  in.sigma_w_aux = std::sqrt(aux_model.sigma_w2);
  in.weights = std::move(weights);
  for (int k = 0; k < in.horizon; ++k) {
    in.true_covs.push_back(step_covariance(true_model, k));
    in.aux_covs.push_back(step_covariance(aux_model, k));
  }
  in.deltas = delta_norms(true_model, aux_model);
  validate_inputs(in);
  return in;
}

Thresholds thresholds(int n, int p, int horizon, double delta) {
  if (n < 1 || p < 0 || horizon < 1) throw ShapeError("thresholds: invalid dimensions");
  if (!(delta > 0.0) || !(delta < 1.0)) throw DomainError("thresholds: delta must lie in (0, 1)");
  Thresholds t;
  t.n0 = 8.0 * (n + p) + 16.0 * std::log(2.0 * horizon / delta);
  t.n1 = (4.0 * n + 2.0 * p) * std::log(horizon / delta);
  return t;
}

BoundResult error_bound(const BoundInputs& in) {
  validate_inputs(in);
  const std::vector<double> qs = in.weights.resolve(in.horizon, in.true_count);
  const double c0 = c0_constant(in.n, in.p, in.horizon, in.delta);

  const Index d = in.n + in.p;
  Matrix denom_mat = Matrix::Zero(d, d);
  double sum_sqrt_true = 0.0;
  double sum_sqrt_aux = 0.0;
  double bias_sum = 0.0;
  for (int k = 0; k < in.horizon; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    denom_mat += static_cast<double>(in.true_count) * in.true_covs[ks] +
                 static_cast<double>(in.aux_count) * qs[ks] * in.aux_covs[ks];
    sum_sqrt_true += sqrt_spectral_norm(in.true_covs[ks]);
    sum_sqrt_aux += qs[ks] * sqrt_spectral_norm(in.aux_covs[ks]);
    bias_sum += qs[ks] * in.deltas.per_step[ks] * spectral_norm(in.aux_covs[ks]);
  }
  const double denom = min_eig_sym(denom_mat);

  BoundResult r;
  r.thr = thresholds(in.n, in.p, in.horizon, in.delta);
  r.thresholds_met =
      std::min(in.true_count, in.aux_count) >= std::max(r.thr.n0, r.thr.n1);
  r.confidence = 1.0 - 4.0 * in.delta;
  if (denom > 0.0) {
    r.noise_term = c0 *
                   (std::sqrt(static_cast<double>(in.true_count)) * in.sigma_w_true * sum_sqrt_true +
                    std::sqrt(static_cast<double>(in.aux_count)) * in.sigma_w_aux * sum_sqrt_aux) /
                   denom;
    r.bias_term = 9.0 * static_cast<double>(in.aux_count) * bias_sum / denom;
  } else {
    r.noise_term = std::numeric_limits<double>::infinity();
    r.bias_term = std::numeric_limits<double>::infinity();
  }
  r.total = r.noise_term + r.bias_term;
  return r;
}

namespace {

// The constant-weight bound applies to a single value; accept any schedule that
// resolves to one.
double constant_weight(const BoundInputs& in) {
  const std::vector<double> qs = in.weights.resolve(in.horizon, in.true_count);
  for (double q : qs) {
    if (q != qs.front()) {
      throw ConfigError("constant_weight_bound: weight schedule is not constant across steps");
    }
  }
  return qs.front();
}

}  // namespace

ConstantWeightBound constant_weight_bound(const BoundInputs& in) {
  validate_inputs(in);
  const double q = constant_weight(in);

  ConstantWeightBound r;
  r.c0 = c0_constant(in.n, in.p, in.horizon, in.delta);
  const Index d = in.n + in.p;
  r.m1 = Matrix::Zero(d, d);
  r.m2 = Matrix::Zero(d, d);
  r.c1 = 0.0;
  r.c2 = 0.0;
  r.c3 = 0.0;
  for (int k = 0; k < in.horizon; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    r.m1 += in.true_covs[ks];
    r.m2 += in.aux_covs[ks];
    r.c1 += 9.0 * spectral_norm(in.aux_covs[ks]);
    r.c2 += sqrt_spectral_norm(in.true_covs[ks]);
    r.c3 += sqrt_spectral_norm(in.aux_covs[ks]);
  }

  const double nr = static_cast<double>(in.true_count);
  const double np = static_cast<double>(in.aux_count);
  const double denom = min_eig_sym((nr * r.m1 + q * np * r.m2).eval());

  BoundResult& b = r.bound;
  b.thr = thresholds(in.n, in.p, in.horizon, in.delta);
  b.thresholds_met = std::min(in.true_count, in.aux_count) >= std::max(b.thr.n0, b.thr.n1);
  b.confidence = 1.0 - 4.0 * in.delta;
  if (denom > 0.0) {
    b.noise_term = r.c0 *
                   (std::sqrt(nr) * in.sigma_w_true * r.c2 + q * std::sqrt(np) * in.sigma_w_aux * r.c3) /
                   denom;
    b.bias_term = q * in.deltas.worst * np * r.c1 / denom;
  } else {
    b.noise_term = std::numeric_limits<double>::infinity();
    b.bias_term = std::numeric_limits<double>::infinity();
  }
  b.total = b.noise_term + b.bias_term;
  return r;
}

BenefitCondition aux_benefit_condition(const BoundInputs& in) {
  const ConstantWeightBound c = constant_weight_bound(in);
  BenefitCondition cond;
  const double lmin1 = min_eig_sym(c.m1);
  const double lmin2 = min_eig_sym(c.m2);
  cond.lhs = in.sigma_w_true * c.c2 / (std::sqrt(static_cast<double>(in.true_count)) * lmin1);
  cond.rhs = in.sigma_w_aux * c.c3 / (std::sqrt(static_cast<double>(in.aux_count)) * lmin2) +
             in.deltas.worst * c.c1 / (lmin2 * c.c0);
  cond.holds = cond.lhs > cond.rhs;
  return cond;
}

ConcentrationTerms concentration_terms(const BatchData& batch, const BoundInputs& in) {
  validate_inputs(in);
  if (batch.true_count != in.true_count || batch.aux_count != in.aux_count ||
      batch.horizon != in.horizon) {
    throw ShapeError("concentration_terms: batch does not match bound inputs");
  }
  const Index d = in.n + in.p;
  if (batch.z_mat.rows() != d || batch.x_mat.rows() != in.n) {
    throw ShapeError("concentration_terms: batch dimensions do not match bound inputs");
  }

  const std::vector<double> qs = in.weights.resolve(in.horizon, in.true_count);
  const double nr = static_cast<double>(in.true_count);
  const double np = static_cast<double>(in.aux_count);
  const double log_term = std::log(9.0 * in.horizon / in.delta);

  Matrix aux_gram = Matrix::Zero(d, d);
  Matrix true_gram = Matrix::Zero(d, d);
  Matrix aux_noise_cross = Matrix::Zero(in.n, d);
  Matrix true_noise_cross = Matrix::Zero(in.n, d);
  Matrix bias_cross = Matrix::Zero(in.n, d);
  for (Index j = 0; j < batch.z_mat.cols(); ++j) {
    const ColumnTag& tag = batch.tags[static_cast<std::size_t>(j)];
    const auto z = batch.z_mat.col(j);
    if (tag.system == 0) {
      true_gram.noalias() += z * z.transpose();
      true_noise_cross.noalias() += batch.w_mat.col(j) * z.transpose();
    } else {
      const double qk = qs[static_cast<std::size_t>(tag.k)];
      aux_gram.noalias() += qk * z * z.transpose();
      aux_noise_cross.noalias() += qk * batch.w_mat.col(j) * z.transpose();
      bias_cross.noalias() += qk * batch.delta_mat.col(j) * z.transpose();
    }
  }

  Matrix aux_gram_rhs = Matrix::Zero(d, d);
  Matrix true_gram_rhs = Matrix::Zero(d, d);
  double aux_noise_rhs = 0.0;
  double bias_rhs = 0.0;
  double true_noise_rhs = 0.0;
  for (int k = 0; k < in.horizon; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    aux_gram_rhs += (np / 4.0) * qs[ks] * in.aux_covs[ks];
    true_gram_rhs += (nr / 4.0) * in.true_covs[ks];
    aux_noise_rhs += qs[ks] * sqrt_spectral_norm(in.aux_covs[ks]);
    bias_rhs += qs[ks] * in.deltas.per_step[ks] * spectral_norm(in.aux_covs[ks]);
    true_noise_rhs += sqrt_spectral_norm(in.true_covs[ks]);
  }
  aux_noise_rhs *= 4.0 * in.sigma_w_aux * std::sqrt(np * (2.0 * in.n + in.p) * log_term);
  true_noise_rhs *= 4.0 * in.sigma_w_true * std::sqrt(nr * (2.0 * in.n + in.p) * log_term);
  bias_rhs *= 9.0 * np / 4.0;

  const auto norm_or_zero = [](const Matrix& m) {
    return m.isZero(0.0) ? 0.0 : spectral_norm(m);
  };

  ConcentrationTerms t;
  t.aux_gram.empirical = min_eig_sym((aux_gram - aux_gram_rhs).eval());
  t.aux_gram.bound = 0.0;
  t.aux_gram.holds = t.aux_gram.empirical >= 0.0;

  t.bias_cross.empirical = norm_or_zero(bias_cross);
  t.bias_cross.bound = bias_rhs;
  t.bias_cross.holds = t.bias_cross.empirical <= t.bias_cross.bound;

  t.true_gram.empirical = min_eig_sym((true_gram - true_gram_rhs).eval());
  t.true_gram.bound = 0.0;
  t.true_gram.holds = t.true_gram.empirical >= 0.0;

  t.aux_noise.empirical = norm_or_zero(aux_noise_cross);
  t.aux_noise.bound = aux_noise_rhs;
  t.aux_noise.holds = t.aux_noise.empirical <= t.aux_noise.bound;

  t.true_noise.empirical = norm_or_zero(true_noise_cross);
  t.true_noise.bound = true_noise_rhs;
  t.true_noise.holds = t.true_noise.empirical <= t.true_noise.bound;
  return t;
}

}  // namespace sysid
