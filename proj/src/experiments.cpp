#include "sysid/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <utility>

#include "sysid/random.hpp"
#include "sysid/simulate.hpp"

namespace sysid {

ScenarioSpec ScenarioSpec::defaults_for(int scenario, SystemModel true_model, SystemModel aux_model) {
  ScenarioSpec spec;
  spec.scenario = scenario;
  spec.true_model = std::move(true_model);
  spec.aux_model = std::move(aux_model);
  switch (scenario) {
    case 1:
    case 2:
      spec.sweep_points = {100, 200, 400, 800, 1600, 3200, 4000};
      spec.schedules = {
          {"q=0", WeightSchedule::constant(0.0)},
          {"q=1", WeightSchedule::constant(1.0)},
          {"q=1e10", WeightSchedule::constant(1e10)},
          {"q=1/sqrt(Nr)", WeightSchedule::decaying(1.0)},
      };
      break;
    case 3:
      spec.sweep_points = {100, 400, 1600, 4000};
      spec.schedules = {
          {"q=0", WeightSchedule::constant(0.0)},
          {"q=0.3", WeightSchedule::constant(0.3)},
          {"q=0.6", WeightSchedule::constant(0.6)},
          {"q=1", WeightSchedule::constant(1.0)},
          {"q=1e10", WeightSchedule::constant(1e10)},
      };
      break;
    default:
      throw ConfigError("ScenarioSpec: scenario must be 1, 2 or 3");
  }
  return spec;
}

namespace {

void validate_spec(const ScenarioSpec& spec) {
  if (spec.scenario < 1 || spec.scenario > 3) throw ConfigError("run_scenario: scenario must be 1, 2 or 3");
  if (spec.sweep_points.empty()) throw ConfigError("run_scenario: empty sweep grid");
  for (std::size_t i = 0; i < spec.sweep_points.size(); ++i) {
    if (spec.sweep_points[i] < 1) throw ConfigError("run_scenario: sweep points must be >= 1");
    if (i > 0 && spec.sweep_points[i] <= spec.sweep_points[i - 1]) {
      throw ConfigError("run_scenario: sweep points must be strictly increasing");
    }
  }
  if (spec.schedules.empty()) throw ConfigError("run_scenario: no weight schedules");
  if (spec.repetitions < 1) throw ConfigError("run_scenario: repetitions must be >= 1");
  if (spec.scenario == 1 && spec.aux_factor < 1) throw ConfigError("run_scenario: aux_factor must be >= 1");
  if (spec.scenario == 2 && spec.fixed_aux < 1) throw ConfigError("run_scenario: fixed_aux must be >= 1");
  if (spec.scenario == 3 && spec.fixed_true < 1) throw ConfigError("run_scenario: fixed_true must be >= 1");
}

std::pair<int, int> rollout_counts(const ScenarioSpec& spec, int sweep_value) {
  switch (spec.scenario) {
    case 1:
      return {sweep_value, spec.aux_factor * sweep_value};
    case 2:
      return {sweep_value, spec.fixed_aux};
    default:
      return {spec.fixed_true, sweep_value};
  }
}

struct Accumulator {
  std::vector<double> theta;
  std::vector<double> a;
  std::vector<double> b;
  bool flagged = false;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stddev_of(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec) {
  validate_spec(spec);
  const Matrix truth = theta_matrix(spec.true_model);

  ScenarioResult result;
  for (int sweep : spec.sweep_points) {
    const auto [n_true, n_aux] = rollout_counts(spec, sweep);
    std::vector<Accumulator> acc(spec.schedules.size());

    for (int rep = 0; rep < spec.repetitions; ++rep) {
      // All schedules at a sweep point share the repetition's data; the seed
      // depends only on (master, sweep value, repetition, source system).
      const std::uint64_t rep_seed =
          mix_seed(mix_seed(spec.master_seed, static_cast<std::uint64_t>(sweep)),
                   static_cast<std::uint64_t>(rep));
      const auto true_rollouts = simulate_rollouts(spec.true_model, n_true, mix_seed(rep_seed, 1));
      const auto aux_rollouts = simulate_rollouts(spec.aux_model, n_aux, mix_seed(rep_seed, 2));
      const BatchData batch =
          assemble_batch(true_rollouts, aux_rollouts, spec.true_model, spec.aux_model);

      for (std::size_t s = 0; s < spec.schedules.size(); ++s) {
        try {
          const Estimate est = wls(batch, spec.schedules[s].schedule);
          const ErrorMetrics m = error_metrics(est, truth);
          acc[s].theta.push_back(m.err_theta);
          acc[s].a.push_back(m.err_a);
          acc[s].b.push_back(m.err_b);
        } catch (const SingularGramError&) {
          acc[s].flagged = true;
        }
      }
    }

    for (std::size_t s = 0; s < spec.schedules.size(); ++s) {
      ScenarioRow row;
      row.sweep_value = sweep;
      row.label = spec.schedules[s].label;
      row.err_theta_mean = mean_of(acc[s].theta);
      row.err_theta_std = stddev_of(acc[s].theta, row.err_theta_mean);
      row.err_a_mean = mean_of(acc[s].a);
      row.err_a_std = stddev_of(acc[s].a, row.err_a_mean);
      row.err_b_mean = mean_of(acc[s].b);
      row.err_b_std = stddev_of(acc[s].b, row.err_b_mean);
      row.flagged = acc[s].flagged;
      if (spec.bound_delta) {
        const BoundInputs inputs =
            BoundInputs::from_models(spec.true_model, spec.aux_model, n_true, n_aux,
                                     *spec.bound_delta, spec.schedules[s].schedule);
        row.bound_total = error_bound(inputs).total;
      }
      result.rows.push_back(std::move(row));
    }
  }
  return result;
}

std::pair<SystemModel, SystemModel> benchmark_models() {
  Matrix a_true(3, 3);
  a_true << 0.6, 0.5, 0.4,
            0.0, 0.4, 0.3,
            0.0, 0.0, 0.3;
  Matrix b_true(3, 2);
  b_true << 1.0, 0.5,
            0.5, 1.0,
            0.5, 0.5;
  Matrix a_aux = a_true;
  a_aux(0, 0) = 0.7;
  Matrix b_aux = b_true;
  b_aux(0, 0) = 1.1;
  return {SystemModel::lti(a_true, b_true, 1.0, 1.0, 1.0, 2),
          SystemModel::lti(a_aux, b_aux, 1.0, 1.0, 1.0, 2)};
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

constexpr const char* kResultHeader =
    "sweep,label,err_theta_mean,err_theta_std,err_a_mean,err_a_std,err_b_mean,err_b_std,bound_total";

}  // namespace

void emit_csv(const ScenarioResult& result, const std::string& path) {
  if (result.rows.empty()) throw ConfigError("emit_csv: empty result");
  for (const ScenarioRow& row : result.rows) {
    if (row.label.find(',') != std::string::npos || row.label.find('\n') != std::string::npos) {
      throw ConfigError("emit_csv: schedule labels must not contain commas or newlines");
    }
  }
  std::vector<const ScenarioRow*> ordered;
  ordered.reserve(result.rows.size());
  for (const ScenarioRow& row : result.rows) ordered.push_back(&row);
  std::stable_sort(ordered.begin(), ordered.end(), [](const ScenarioRow* a, const ScenarioRow* b) {
    if (a->sweep_value != b->sweep_value) return a->sweep_value < b->sweep_value;
    return a->label < b->label;
  });

  std::ofstream out(path);
  if (!out) throw IoError("emit_csv: cannot open " + path + " for writing");
  out << kResultHeader << '\n';
  for (const ScenarioRow* row : ordered) {
    out << row->sweep_value << ',' << row->label << ',' << format_double(row->err_theta_mean)
        << ',' << format_double(row->err_theta_std) << ',' << format_double(row->err_a_mean)
        << ',' << format_double(row->err_a_std) << ',' << format_double(row->err_b_mean) << ','
        << format_double(row->err_b_std) << ',';
    if (row->bound_total) out << format_double(*row->bound_total);
    out << '\n';
  }
  if (!out) throw IoError("emit_csv: write failed for " + path);
}

ScenarioResult load_result_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_result_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kResultHeader)) {
    throw ConfigError("result csv: unexpected header");
  }
  ScenarioResult result;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 9) throw ConfigError("result csv: wrong field count");
    ScenarioRow row;
    row.sweep_value = std::atoi(f[0].c_str());
    row.label = f[1];
    const auto num = [&](const std::string& s) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0') throw ConfigError("result csv: bad numeric field '" + s + "'");
      return v;
    };
    row.err_theta_mean = num(f[2]);
    row.err_theta_std = num(f[3]);
    row.err_a_mean = num(f[4]);
    row.err_a_std = num(f[5]);
    row.err_b_mean = num(f[6]);
    row.err_b_std = num(f[7]);
    if (!f[8].empty()) row.bound_total = num(f[8]);
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace sysid
