#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "sysid/experiments.hpp"
#include "sysid/numerics.hpp"
#include "sysid/random.hpp"
#include "sysid/simulate.hpp"

using namespace sysid;

namespace {

Matrix scalar1(double v) {
  Matrix m(1, 1);
  m << v;
  return m;
}

bool rollouts_equal(const std::vector<Rollout>& a, const std::vector<Rollout>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i].states - b[i].states).cwiseAbs().maxCoeff() != 0.0) return false;
    if ((a[i].inputs - b[i].inputs).cwiseAbs().maxCoeff() != 0.0) return false;
    if ((a[i].noises - b[i].noises).cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("simulate_rollouts: degenerate variances give all-zero trajectories") {
  const SystemModel model = SystemModel::lti(scalar1(0.5), scalar1(1.0), 0.0, 0.0, 0.0, 4);
  for (const Rollout& r : simulate_rollouts(model, 3, 9)) {
    CHECK(r.states.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.inputs.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.noises.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("simulate_rollouts: deterministic propagation without noise") {
  const SystemModel model = SystemModel::lti(scalar1(0.5), scalar1(1.0), 1.0, 0.0, 0.0, 2);
  for (const Rollout& r : simulate_rollouts(model, 5, 11)) {
    CHECK(r.states(0, 0) == 0.0);
    CHECK(r.states(0, 1) == r.inputs(0, 0));  // x_1 = b u_0 with b = 1, x_0 = 0
  }
}

TEST_CASE("simulate_rollouts: sample mean of x_1 stays inside the CLT band") {
  const auto [true_model, aux_model] = benchmark_models();
  const int count = 100000;
  const auto rollouts = simulate_rollouts(true_model, count, 1234);
  Vector mean = Vector::Zero(3);
  for (const Rollout& r : rollouts) mean += r.states.col(1);
  mean /= double(count);
  const Matrix cov1 = step_covariance(true_model, 1);
  for (Index j = 0; j < 3; ++j) {
    CHECK(std::abs(mean(j)) <= 3.0 * std::sqrt(cov1(j, j) / double(count)));
  }
}

TEST_CASE("simulate_rollouts: replay identity holds on stored realizations") {
  std::mt19937_64 engine(21);
  const Matrix a = oracle::random_matrix(3, 3, engine, 0.7);
  const Matrix b = oracle::random_matrix(3, 2, engine);
  const SystemModel model = SystemModel::lti(a, b, 1.0, 0.4, 0.9, 5);
  for (const Rollout& r : simulate_rollouts(model, 10, 77)) {
    for (int k = 0; k < model.horizon; ++k) {
      const Vector replayed = a * r.states.col(k) + b * r.inputs.col(k) + r.noises.col(k);
      CHECK((r.states.col(k + 1) - replayed).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("simulate_rollouts: bit-reproducible per seed, different across seeds") {
  const auto [true_model, aux_model] = benchmark_models();
  const auto first = simulate_rollouts(true_model, 8, 42);
  const auto second = simulate_rollouts(true_model, 8, 42);
  CHECK(rollouts_equal(first, second));

  const auto other = simulate_rollouts(true_model, 8, 43);
  CHECK_FALSE(rollouts_equal(first, other));

  // Substream scheme: a larger batch starts with the same rollouts.
  const auto larger = simulate_rollouts(true_model, 12, 42);
  CHECK((larger[0].states - first[0].states).cwiseAbs().maxCoeff() == 0.0);
  CHECK((larger[7].states - first[7].states).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(simulate_rollouts(true_model, 0, 1), ConfigError);
}

TEST_CASE("assemble_batch: no auxiliary data means zero Delta and X = Theta Z + W") {
  const auto [true_model, aux_model] = benchmark_models();
  const auto rollouts = simulate_rollouts(true_model, 6, 5);
  const BatchData batch = assemble_batch(rollouts, {}, true_model, true_model);
  CHECK(batch.delta_mat.cwiseAbs().maxCoeff() == 0.0);
  CHECK(batch.true_count == 6);
  CHECK(batch.aux_count == 0);

  const Matrix theta = theta_matrix(true_model);
  const Matrix resid = batch.x_mat - theta * batch.z_mat - batch.w_mat;
  CHECK(resid.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("assemble_batch: identical models zero the Delta columns of auxiliary data") {
  const auto [true_model, aux_model] = benchmark_models();
  const auto rollouts = simulate_rollouts(true_model, 2, 6);
  const auto aux = simulate_rollouts(true_model, 3, 7);
  const BatchData batch = assemble_batch(rollouts, aux, true_model, true_model);
  CHECK(batch.delta_mat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("assemble_batch: scalar T=1 Delta column fixture") {
  const SystemModel true_model = SystemModel::lti(scalar1(1.0), scalar1(1.0), 1.0, 0.0, 0.0, 1);
  const SystemModel aux_model = SystemModel::lti(scalar1(1.1), scalar1(1.1), 1.0, 0.0, 0.0, 1);

  Rollout aux;  // hand-built: z_0 = (2, 3), noiseless
  aux.states.resize(1, 2);
  aux.inputs.resize(1, 1);
  aux.noises = Matrix::Zero(1, 1);
  aux.states(0, 0) = 2.0;
  aux.inputs(0, 0) = 3.0;
  aux.states(0, 1) = 1.1 * 2.0 + 1.1 * 3.0;

  const BatchData batch = assemble_batch({}, {aux}, true_model, aux_model);
  CHECK(batch.delta_mat(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  const Matrix resid =
      batch.x_mat - theta_matrix(true_model) * batch.z_mat - batch.w_mat - batch.delta_mat;
  CHECK(resid.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("assemble_batch: batch identity, column order and bookkeeping") {
  const auto [true_model, aux_model] = benchmark_models();
  const int n_true = 4, n_aux = 7;
  const auto t_rollouts = simulate_rollouts(true_model, n_true, 31);
  const auto a_rollouts = simulate_rollouts(aux_model, n_aux, 32);
  const BatchData batch = assemble_batch(t_rollouts, a_rollouts, true_model, aux_model);

  const int horizon = true_model.horizon;
  CHECK(batch.x_mat.cols() == (n_true + n_aux) * horizon);
  CHECK(batch.tags.size() == static_cast<std::size_t>((n_true + n_aux) * horizon));

  // Reversed-time order inside a rollout, true system first.
  CHECK(batch.tags[0].system == 0);
  CHECK(batch.tags[0].rollout == 0);
  CHECK(batch.tags[0].k == horizon - 1);
  CHECK(batch.tags[1].k == horizon - 2);
  const std::size_t first_aux = static_cast<std::size_t>(n_true * horizon);
  CHECK(batch.tags[first_aux].system == 1);
  CHECK(batch.tags[first_aux].rollout == 0);
  CHECK((batch.z_mat.col(0).head(3) - t_rollouts[0].states.col(horizon - 1)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((batch.x_mat.col(0) - t_rollouts[0].states.col(horizon)).cwiseAbs().maxCoeff() == 0.0);

  const Matrix resid = batch.x_mat - theta_matrix(true_model) * batch.z_mat - batch.w_mat - batch.delta_mat;
  CHECK(resid.cwiseAbs().maxCoeff() <= 1e-10);

  // Horizon mismatch between the models and the rollouts.
  const SystemModel longer = SystemModel::lti(true_model.a(0), true_model.b(0), 1, 1, 1, 3);
  CHECK_THROWS_AS(assemble_batch(t_rollouts, a_rollouts, longer, longer), ShapeError);
}

TEST_CASE("rollout CSV round-trips exactly") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sysid_rollout_csv_test";
  fs::create_directories(dir);
  const std::string path = (dir / "rollouts.csv").string();

  const auto [true_model, aux_model] = benchmark_models();
  RolloutSet set;
  set.true_rollouts = simulate_rollouts(true_model, 3, 1001);
  set.aux_rollouts = simulate_rollouts(aux_model, 2, 1002);
  save_rollouts_csv(path, set);

  const RolloutSet back = load_rollouts_csv(path);
  CHECK(rollouts_equal(back.true_rollouts, set.true_rollouts));
  CHECK(rollouts_equal(back.aux_rollouts, set.aux_rollouts));

  CHECK_THROWS_AS(load_rollouts_csv((dir / "missing.csv").string()), IoError);
  CHECK_THROWS_AS(save_rollouts_csv((dir / "no_dir" / "x.csv").string(), set), IoError);

  fs::remove_all(dir);
}
