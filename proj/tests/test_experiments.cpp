#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sysid/experiments.hpp"
#include "sysid/systems.hpp"

using namespace sysid;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("benchmark_models: pinned matrices, variances and model difference") {
  const auto [true_model, aux_model] = benchmark_models();
  CHECK(true_model.a(0)(0, 0) == 0.6);
  CHECK(aux_model.a(0)(0, 0) == 0.7);
  CHECK(true_model.b(0)(0, 0) == 1.0);
  CHECK(aux_model.b(0)(0, 0) == 1.1);
  CHECK((true_model.a(0).bottomRows(2) - aux_model.a(0).bottomRows(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((true_model.b(0).bottomRows(2) - aux_model.b(0).bottomRows(2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(true_model.horizon == 2);
  CHECK(true_model.sigma_u2 == 1.0);
  CHECK(true_model.sigma_w2 == 1.0);
  CHECK(true_model.sigma_x2 == 1.0);
  CHECK(aux_model.sigma_w2 == 1.0);

  const ModelDelta d = delta_norms(true_model, aux_model);
  CHECK(d.worst == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("ScenarioSpec defaults match the documented grids") {
  const auto [true_model, aux_model] = benchmark_models();
  const ScenarioSpec s1 = ScenarioSpec::defaults_for(1, true_model, aux_model);
  CHECK(s1.sweep_points == std::vector<int>{100, 200, 400, 800, 1600, 3200, 4000});
  CHECK(s1.aux_factor == 3);
  CHECK(s1.repetitions == 10);
  CHECK(s1.schedules.size() == 4);

  const ScenarioSpec s2 = ScenarioSpec::defaults_for(2, true_model, aux_model);
  CHECK(s2.fixed_aux == 2400);

  const ScenarioSpec s3 = ScenarioSpec::defaults_for(3, true_model, aux_model);
  CHECK(s3.sweep_points == std::vector<int>{100, 400, 1600, 4000});
  CHECK(s3.fixed_true == 50);
  CHECK(s3.schedules.size() == 5);

  CHECK_THROWS_AS(ScenarioSpec::defaults_for(4, true_model, aux_model), ConfigError);
}

TEST_CASE("run_scenario: noiseless identical systems give vanishing error rows") {
  const auto [true_model, aux_model] = benchmark_models();
  const SystemModel clean = SystemModel::lti(true_model.a(0), true_model.b(0), 1.0, 0.0, 1.0, 2);
  ScenarioSpec spec = ScenarioSpec::defaults_for(1, clean, clean);
  spec.sweep_points = {5, 10};
  spec.repetitions = 1;
  spec.master_seed = 17;
  const ScenarioResult result = run_scenario(spec);
  CHECK(result.rows.size() == 2 * spec.schedules.size());
  for (const ScenarioRow& row : result.rows) {
    CHECK_FALSE(row.flagged);
    CHECK(row.err_theta_mean <= 1e-8);
    CHECK(row.err_a_mean <= 1e-8);
    CHECK(row.err_b_mean <= 1e-8);
  }
}

TEST_CASE("run_scenario: q = 0 error shrinks at the 1/sqrt(N) rate") {
  const auto [true_model, aux_model] = benchmark_models();
  ScenarioSpec spec = ScenarioSpec::defaults_for(1, true_model, aux_model);
  spec.sweep_points = {100, 4000};
  spec.schedules = {{"q=0", WeightSchedule::constant(0.0)}};
  spec.master_seed = 7;
  const ScenarioResult result = run_scenario(spec);
  REQUIRE(result.rows.size() == 2);
  const double small_n = result.rows[0].err_theta_mean;
  const double large_n = result.rows[1].err_theta_mean;
  CHECK(large_n < small_n);
  const double expected_ratio = std::sqrt(100.0 / 4000.0);
  const double ratio = large_n / small_n;
  CHECK(ratio < expected_ratio * 3.0);
  CHECK(ratio > expected_ratio / 3.0);
}

TEST_CASE("run_scenario: a singular Gram flags the row instead of aborting") {
  const auto [true_model, aux_model] = benchmark_models();
  ScenarioSpec spec = ScenarioSpec::defaults_for(2, true_model, aux_model);
  // One rollout gives 2 columns, too few for the 5-dimensional regressor, so
  // q = 0 cannot be solved while weighted schedules still can.
  spec.sweep_points = {1, 20};
  spec.fixed_aux = 30;
  spec.repetitions = 2;
  spec.master_seed = 3;
  const ScenarioResult result = run_scenario(spec);
  bool saw_flagged = false;
  for (const ScenarioRow& row : result.rows) {
    if (row.sweep_value == 1 && row.label == "q=0") {
      CHECK(row.flagged);
      saw_flagged = true;
    }
    if (row.sweep_value == 20) CHECK_FALSE(row.flagged);
  }
  CHECK(saw_flagged);
}

TEST_CASE("run_scenario: validation errors") {
  const auto [true_model, aux_model] = benchmark_models();
  ScenarioSpec spec = ScenarioSpec::defaults_for(1, true_model, aux_model);
  spec.sweep_points = {100, 100};
  CHECK_THROWS_AS(run_scenario(spec), ConfigError);
  spec.sweep_points = {};
  CHECK_THROWS_AS(run_scenario(spec), ConfigError);
  spec.sweep_points = {10};
  spec.repetitions = 0;
  CHECK_THROWS_AS(run_scenario(spec), ConfigError);
}

TEST_CASE("run_scenario and emit_csv are fully deterministic in the master seed") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sysid_experiments_test";
  fs::create_directories(dir);

  const auto [true_model, aux_model] = benchmark_models();
  ScenarioSpec spec = ScenarioSpec::defaults_for(2, true_model, aux_model);
  spec.sweep_points = {20, 40};
  spec.fixed_aux = 30;
  spec.repetitions = 3;
  spec.master_seed = 99;
  spec.bound_delta = 0.05;

  const std::string a = (dir / "a.csv").string();
  const std::string b = (dir / "b.csv").string();
  emit_csv(run_scenario(spec), a);
  emit_csv(run_scenario(spec), b);
  CHECK(read_file(a) == read_file(b));

  spec.master_seed = 100;
  const std::string c = (dir / "c.csv").string();
  emit_csv(run_scenario(spec), c);
  CHECK(read_file(a) != read_file(c));

  fs::remove_all(dir);
}

TEST_CASE("emit_csv: layout, ordering and parse-back") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sysid_emit_csv_test";
  fs::create_directories(dir);
  const std::string path = (dir / "result.csv").string();

  ScenarioResult result;
  ScenarioRow row;
  row.sweep_value = 100;
  row.label = "q=1";
  row.err_theta_mean = 0.125;
  row.err_theta_std = 0.5e-3;
  row.err_a_mean = 0.1;
  row.err_a_std = 0.0;
  row.err_b_mean = 1.0 / 3.0;
  row.err_b_std = 0.25;
  result.rows.push_back(row);

  emit_csv(result, path);
  {
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line ==
          "sweep,label,err_theta_mean,err_theta_std,err_a_mean,err_a_std,err_b_mean,err_b_std,"
          "bound_total");
    REQUIRE(std::getline(in, line));
    CHECK(line.back() == ',');  // absent bound stays an empty field, not 0
    CHECK_FALSE(std::getline(in, line));
  }

  // Unsorted input rows come back sorted by (sweep, label).
  ScenarioRow other = row;
  other.sweep_value = 50;
  other.label = "q=0";
  other.bound_total = 2.5;
  result.rows.insert(result.rows.begin(), row);
  result.rows[0].label = "q=0.5";
  result.rows.push_back(other);
  emit_csv(result, path);
  const ScenarioResult back = load_result_csv(path);
  REQUIRE(back.rows.size() == 3);
  CHECK(back.rows[0].sweep_value == 50);
  CHECK(back.rows[0].label == "q=0");
  CHECK(back.rows[1].label == "q=0.5");
  CHECK(back.rows[2].label == "q=1");

  // Exact round-trip of every numeric field.
  CHECK(back.rows[0].bound_total.has_value());
  CHECK(*back.rows[0].bound_total == 2.5);
  CHECK_FALSE(back.rows[2].bound_total.has_value());
  CHECK(back.rows[2].err_b_mean == 1.0 / 3.0);
  CHECK(back.rows[2].err_theta_std == 0.5e-3);

  ScenarioResult empty;
  CHECK_THROWS_AS(emit_csv(empty, path), ConfigError);
  ScenarioResult bad = result;
  bad.rows[0].label = "a,b";
  CHECK_THROWS_AS(emit_csv(bad, path), ConfigError);
  CHECK_THROWS_AS(emit_csv(result, (dir / "no_dir" / "x.csv").string()), IoError);

  fs::remove_all(dir);
}
