#include <cstdint>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sysid/bounds.hpp"
#include "sysid/estimator.hpp"
#include "sysid/experiments.hpp"
#include "sysid/random.hpp"
#include "sysid/simulate.hpp"
#include "sysid/systems.hpp"

namespace {

using nlohmann::json;
using namespace sysid;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSingularGram = 3;

std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::string cur;
  const auto flush = [&] {
    if (cur.empty()) throw ConfigError(std::string("empty entry in ") + what);
    char* end = nullptr;
    const double v = std::strtod(cur.c_str(), &end);
    if (end == cur.c_str() || *end != '\0') {
      throw ConfigError(std::string("bad numeric entry '") + cur + "' in " + what);
    }
    out.push_back(v);
    cur.clear();
  };
  for (char ch : text) {
    if (ch == ',') {
      flush();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

WeightSchedule schedule_from_json(const json& j) {
  const int present = static_cast<int>(j.contains("q")) + static_cast<int>(j.contains("q_steps")) +
                      static_cast<int>(j.contains("decay_scale"));
  if (present != 1) {
    throw ConfigError("schedule needs exactly one of 'q', 'q_steps', 'decay_scale'");
  }
  if (j.contains("q")) return WeightSchedule::constant(j.at("q").get<double>());
  if (j.contains("decay_scale")) return WeightSchedule::decaying(j.at("decay_scale").get<double>());
  return WeightSchedule::per_step_weights(j.at("q_steps").get<std::vector<double>>());
}

json matrix_rows_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

struct GlobalFlags {
  std::uint64_t seed = 0;
  bool seed_set = false;
  double delta = 0.05;
  bool delta_set = false;
};

int run_simulate(const std::string& true_model_path, const std::string& aux_model_path,
                 int true_count, int aux_count, std::uint64_t seed, const std::string& out_path) {
  RolloutSet set;
  const SystemModel true_model = load_model(true_model_path);
  // Substream 1 for the true system, 2 for the auxiliary one; matches the
  // seeding used by the experiment harness.
  set.true_rollouts = simulate_rollouts(true_model, true_count, mix_seed(seed, 1));
  if (!aux_model_path.empty()) {
    if (aux_count < 1) throw ConfigError("simulate: --aux-count must be >= 1 with --aux-model");
    const SystemModel aux_model = load_model(aux_model_path);
    set.aux_rollouts = simulate_rollouts(aux_model, aux_count, mix_seed(seed, 2));
  }
  save_rollouts_csv(out_path, set);
  std::printf("rollouts_true=%zu\nrollouts_aux=%zu\nout=%s\n", set.true_rollouts.size(),
              set.aux_rollouts.size(), out_path.c_str());
  return kExitOk;
}

int run_estimate(const std::string& data_path, const WeightSchedule& weights, bool ridge,
                 const std::string& true_model_path, const std::string& out_path) {
  const RolloutSet set = load_rollouts_csv(data_path);
  if (set.true_rollouts.empty() && set.aux_rollouts.empty()) {
    throw ConfigError("estimate: no rollouts in " + data_path);
  }
  const Rollout& first = set.true_rollouts.empty() ? set.aux_rollouts.front() : set.true_rollouts.front();
  const Index n = first.states.rows();
  const Index p = first.inputs.rows();
  const int horizon = static_cast<int>(first.inputs.cols());

  // Identity placeholder models define the batch geometry; the weighted
  // estimator itself never reads model matrices.
  const SystemModel shape_model = SystemModel::lti(Matrix::Identity(n, n), Matrix::Zero(n, p),
                                                   1.0, 0.0, 0.0, horizon);
  const BatchData batch = assemble_batch(set.true_rollouts, set.aux_rollouts, shape_model, shape_model);

  WlsOptions opts;
  opts.ridge_fallback = ridge;
  const Estimate est = wls(batch, weights, opts);

  json meta;
  meta["gram_min_eig"] = est.gram_min_eig;
  meta["columns"] = static_cast<int>(batch.z_mat.cols());
  meta["true_rollouts"] = batch.true_count;
  meta["aux_rollouts"] = batch.aux_count;
  switch (weights.kind) {
    case WeightSchedule::Kind::Constant:
      meta["weights"] = {{"q", weights.q}};
      break;
    case WeightSchedule::Kind::PerStep:
      meta["weights"] = {{"q_steps", weights.per_step}};
      break;
    case WeightSchedule::Kind::DecayingSqrt:
      meta["weights"] = {{"decay_scale", weights.scale}};
      break;
  }
  meta["ridge_fallback"] = ridge;

  json out;
  out["n"] = static_cast<int>(n);
  out["p"] = static_cast<int>(p);
  out["T"] = horizon;
  out["A"] = matrix_rows_json(est.a_hat);
  out["B"] = matrix_rows_json(est.b_hat);
  out["metadata"] = std::move(meta);

  if (!out_path.empty()) {
    std::ofstream f(out_path);
    if (!f) throw IoError("estimate: cannot open " + out_path + " for writing");
    f << out.dump(2) << '\n';
  } else {
    std::cout << out.dump(2) << '\n';
  }

  std::printf("gram_min_eig=%.17g\ncolumns=%d\n", est.gram_min_eig,
              static_cast<int>(batch.z_mat.cols()));
  if (!true_model_path.empty()) {
    const SystemModel truth = load_model(true_model_path);
    const ErrorMetrics m = error_metrics(est, theta_matrix(truth));
    std::printf("err_theta=%.17g\nerr_a=%.17g\nerr_b=%.17g\n", m.err_theta, m.err_a, m.err_b);
  }
  return kExitOk;
}

int run_bound(const std::string& config_path, const GlobalFlags& flags) {
  const json cfg = load_json_file(config_path);
  for (const char* key : {"true_model", "aux_model", "n_r", "n_p"}) {
    if (!cfg.contains(key)) throw ConfigError("bound config: missing key '" + std::string(key) + "'");
  }
  const SystemModel true_model = load_model(cfg.at("true_model").get<std::string>());
  const SystemModel aux_model = load_model(cfg.at("aux_model").get<std::string>());
  const int n_r = cfg.at("n_r").get<int>();
  const int n_p = cfg.at("n_p").get<int>();

  double delta = flags.delta;
  if (!flags.delta_set && cfg.contains("delta")) delta = cfg.at("delta").get<double>();

  WeightSchedule weights = WeightSchedule::constant(1.0);
  if (cfg.contains("q") || cfg.contains("q_steps") || cfg.contains("decay_scale")) {
    weights = schedule_from_json(cfg);
  }

  const BoundInputs inputs = BoundInputs::from_models(true_model, aux_model, n_r, n_p, delta, weights);
  const BoundResult r = error_bound(inputs);
  // The benefit condition needs a single constant weight; a genuinely
  // per-step schedule leaves the verdict undefined.
  std::optional<BenefitCondition> cond;
  try {
    cond = aux_benefit_condition(inputs);
  } catch (const ConfigError&) {
  }

  std::printf("Finite-sample error bound (confidence %.6g):\n", r.confidence);
  std::printf("  error due to noise:            %.10g\n", r.noise_term);
  std::printf("  error due to model difference: %.10g\n", r.bias_term);
  std::printf("  total:                         %.10g\n", r.total);
  std::printf("  thresholds N0=%.6f N1=%.6f -> %s (N_r=%d, N_p=%d)\n", r.thr.n0, r.thr.n1,
              r.thresholds_met ? "met" : "NOT MET (bound advisory)", n_r, n_p);
  if (cond) {
    std::printf("  auxiliary data helps (sufficient condition): %s\n", cond->holds ? "yes" : "no");
  } else {
    std::printf("  auxiliary data helps (sufficient condition): n/a for per-step weights\n");
  }
  std::printf("---\n");
  std::printf("noise_term=%.17g\n", r.noise_term);
  std::printf("bias_term=%.17g\n", r.bias_term);
  std::printf("total=%.17g\n", r.total);
  std::printf("confidence=%.17g\n", r.confidence);
  std::printf("n0=%.17g\n", r.thr.n0);
  std::printf("n1=%.17g\n", r.thr.n1);
  std::printf("thresholds_met=%d\n", r.thresholds_met ? 1 : 0);
  if (cond) {
    std::printf("benefit_lhs=%.17g\n", cond->lhs);
    std::printf("benefit_rhs=%.17g\n", cond->rhs);
    std::printf("benefit_holds=%d\n", cond->holds ? 1 : 0);
  }
  return kExitOk;
}

int run_experiment(int scenario, const std::string& config_path, const std::string& out_path,
                   const GlobalFlags& flags) {
  json cfg = json::object();
  if (!config_path.empty()) cfg = load_json_file(config_path);

  SystemModel true_model, aux_model;
  if (cfg.contains("true_model") || cfg.contains("aux_model")) {
    if (!cfg.contains("true_model") || !cfg.contains("aux_model")) {
      throw ConfigError("experiment config: provide both model paths or neither");
    }
    true_model = load_model(cfg.at("true_model").get<std::string>());
    aux_model = load_model(cfg.at("aux_model").get<std::string>());
  } else {
    std::tie(true_model, aux_model) = benchmark_models();
  }

  ScenarioSpec spec = ScenarioSpec::defaults_for(scenario, std::move(true_model), std::move(aux_model));
  if (cfg.contains("sweep_points")) spec.sweep_points = cfg.at("sweep_points").get<std::vector<int>>();
  if (cfg.contains("repetitions")) spec.repetitions = cfg.at("repetitions").get<int>();
  if (cfg.contains("master_seed")) spec.master_seed = cfg.at("master_seed").get<std::uint64_t>();
  if (cfg.contains("aux_factor")) spec.aux_factor = cfg.at("aux_factor").get<int>();
  if (cfg.contains("fixed_aux")) spec.fixed_aux = cfg.at("fixed_aux").get<int>();
  if (cfg.contains("fixed_true")) spec.fixed_true = cfg.at("fixed_true").get<int>();
  if (cfg.contains("schedules")) {
    spec.schedules.clear();
    for (const json& sj : cfg.at("schedules")) {
      if (!sj.contains("label")) throw ConfigError("experiment config: schedule without label");
      spec.schedules.push_back({sj.at("label").get<std::string>(), schedule_from_json(sj)});
    }
  }
  if (cfg.contains("delta")) spec.bound_delta = cfg.at("delta").get<double>();
  if (flags.delta_set) spec.bound_delta = flags.delta;
  if (flags.seed_set) spec.master_seed = flags.seed;

  const ScenarioResult result = run_scenario(spec);
  emit_csv(result, out_path);
  std::printf("scenario=%d\nrows=%zu\nout=%s\n", scenario, result.rows.size(), out_path.c_str());
  return kExitOk;
}

int run_cv_select(const std::string& data_path, const std::string& candidates_text, int folds,
                  std::uint64_t seed) {
  const RolloutSet set = load_rollouts_csv(data_path);
  const std::vector<double> candidates = parse_number_list(candidates_text, "--candidates");
  const double q = select_weight_cv(set.true_rollouts, set.aux_rollouts, candidates, folds, seed);
  std::printf("chosen_q=%.17g\n", q);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear system identification from true-system and auxiliary-system rollouts"};
  app.require_subcommand(1);

  GlobalFlags flags;
  auto* seed_opt = app.add_option("--seed", flags.seed, "Master seed (default 0)");
  auto* delta_opt =
      app.add_option("--delta", flags.delta, "Failure-probability parameter (default 0.05)");

  auto* sim = app.add_subcommand("simulate", "Simulate rollouts from model files into a CSV");
  std::string sim_true_model, sim_aux_model, sim_out;
  int sim_true_count = 0, sim_aux_count = 0;
  sim->add_option("--true-model", sim_true_model, "True-system model file")->required();
  sim->add_option("--aux-model", sim_aux_model, "Auxiliary-system model file");
  sim->add_option("--true-count", sim_true_count, "Number of true-system rollouts")->required();
  sim->add_option("--aux-count", sim_aux_count, "Number of auxiliary-system rollouts");
  sim->add_option("--out", sim_out, "Output rollout CSV")->required();

  auto* est = app.add_subcommand("estimate", "Weighted least squares estimate from a rollout CSV");
  std::string est_data, est_true_model, est_out, est_q_steps;
  double est_q = 0.0;
  bool est_ridge = false;
  est->add_option("--data", est_data, "Rollout CSV")->required();
  auto* est_q_opt = est->add_option("--q", est_q, "Constant auxiliary weight");
  auto* est_steps_opt =
      est->add_option("--q-steps", est_q_steps, "Per-step weights q_{T-1},...,q_0 (comma separated)");
  est->add_flag("--ridge", est_ridge, "Enable the ridge fallback for a singular Gram");
  est->add_option("--true-model", est_true_model, "Optional true model for error reporting");
  est->add_option("--out", est_out, "Output estimate file (JSON; stdout when omitted)");

  auto* bnd = app.add_subcommand("bound", "Evaluate the finite-sample error bound from a config");
  std::string bnd_config;
  bnd->add_option("--config", bnd_config, "JSON config naming models, N_r, N_p, weights")->required();

  auto* exp = app.add_subcommand("experiment", "Run a Monte-Carlo sweep scenario");
  int exp_scenario = 0;
  std::string exp_config, exp_out;
  exp->add_option("--scenario", exp_scenario, "Scenario number: 1, 2 or 3")
      ->required()
      ->check(CLI::Range(1, 3));
  exp->add_option("--config", exp_config, "Optional JSON config overriding the defaults");
  exp->add_option("--out", exp_out, "Output CSV")->required();

  auto* cvs = app.add_subcommand("cv-select", "Cross-validated constant-weight selection");
  std::string cv_data, cv_candidates;
  int cv_folds = 5;
  cvs->add_option("--data", cv_data, "Rollout CSV")->required();
  cvs->add_option("--candidates", cv_candidates, "Candidate q values (comma separated)")->required();
  cvs->add_option("--folds", cv_folds, "Number of folds (default 5)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  flags.seed_set = seed_opt->count() > 0;
  flags.delta_set = delta_opt->count() > 0;

  try {
    if (sim->parsed()) {
      return run_simulate(sim_true_model, sim_aux_model, sim_true_count, sim_aux_count, flags.seed,
                          sim_out);
    }
    if (est->parsed()) {
      WeightSchedule weights = WeightSchedule::constant(est_q);
      if (est_steps_opt->count() > 0 && est_q_opt->count() > 0) {
        throw ConfigError("estimate: pass either --q or --q-steps, not both");
      }
      if (est_steps_opt->count() > 0) {
        weights = WeightSchedule::per_step_weights(parse_number_list(est_q_steps, "--q-steps"));
      }
      return run_estimate(est_data, weights, est_ridge, est_true_model, est_out);
    }
    if (bnd->parsed()) return run_bound(bnd_config, flags);
    if (exp->parsed()) return run_experiment(exp_scenario, exp_config, exp_out, flags);
    if (cvs->parsed()) return run_cv_select(cv_data, cv_candidates, cv_folds, flags.seed);
    throw ConfigError("no subcommand given");
  } catch (const SingularGramError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSingularGram;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
