#include "sysid/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "sysid/random.hpp"

namespace sysid {

std::vector<Rollout> simulate_rollouts(const SystemModel& model, int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("simulate_rollouts: count must be >= 1");
  const Index n = model.state_dim();
  const Index p = model.input_dim();
  const int horizon = model.horizon;
  const double sx = std::sqrt(model.sigma_x2);
  const double su = std::sqrt(model.sigma_u2);
  const double sw = std::sqrt(model.sigma_w2);

  std::vector<Rollout> rollouts(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    GaussianSampler gauss(mix_seed(seed, static_cast<std::uint64_t>(i)));
    Rollout& r = rollouts[static_cast<std::size_t>(i)];
    r.states.resize(n, horizon + 1);
    r.inputs.resize(p, horizon);
    r.noises.resize(n, horizon);
    for (Index j = 0; j < n; ++j) r.states(j, 0) = sx * gauss();
    for (int k = 0; k < horizon; ++k) {
      for (Index j = 0; j < p; ++j) r.inputs(j, k) = su * gauss();
      for (Index j = 0; j < n; ++j) r.noises(j, k) = sw * gauss();
      r.states.col(k + 1) =
          model.a(k) * r.states.col(k) + model.b(k) * r.inputs.col(k) + r.noises.col(k);
    }
  }
  return rollouts;
}

namespace {

void check_rollout_dims(const Rollout& r, Index n, Index p, int horizon, const char* which) {
  if (r.states.rows() != n || r.states.cols() != horizon + 1 || r.inputs.rows() != p ||
      r.inputs.cols() != horizon || r.noises.rows() != n || r.noises.cols() != horizon) {
    throw ShapeError(std::string("assemble_batch: ") + which +
                     " rollout dimensions disagree with the model horizon");
  }
}

}  // namespace

BatchData assemble_batch(const std::vector<Rollout>& true_rollouts,
                         const std::vector<Rollout>& aux_rollouts,
                         const SystemModel& true_model, const SystemModel& aux_model) {
  if (true_model.state_dim() != aux_model.state_dim() ||
      true_model.input_dim() != aux_model.input_dim() ||
      true_model.horizon != aux_model.horizon) {
    throw ShapeError("assemble_batch: models must share n, p and horizon");
  }
  const Index n = true_model.state_dim();
  const Index p = true_model.input_dim();
  const int horizon = true_model.horizon;

  for (const Rollout& r : true_rollouts) check_rollout_dims(r, n, p, horizon, "true");
  for (const Rollout& r : aux_rollouts) check_rollout_dims(r, n, p, horizon, "aux");

  // Model difference per step, applied to auxiliary columns only.
  std::vector<Matrix> delta_theta;
  if (!aux_rollouts.empty()) {
    delta_theta.reserve(static_cast<std::size_t>(horizon));
    for (int k = 0; k < horizon; ++k) {
      Matrix d(n, n + p);
      d.leftCols(n) = aux_model.a(k) - true_model.a(k);
      d.rightCols(p) = aux_model.b(k) - true_model.b(k);
      delta_theta.push_back(std::move(d));
    }
  }

  const Index cols =
      static_cast<Index>(true_rollouts.size() + aux_rollouts.size()) * horizon;
  BatchData batch;
  batch.x_mat.resize(n, cols);
  batch.z_mat.resize(n + p, cols);
  batch.w_mat.resize(n, cols);
  batch.delta_mat = Matrix::Zero(n, cols);
  batch.tags.reserve(static_cast<std::size_t>(cols));
  batch.true_count = static_cast<int>(true_rollouts.size());
  batch.aux_count = static_cast<int>(aux_rollouts.size());
  batch.horizon = horizon;

  Index c = 0;
  const auto fill = [&](const std::vector<Rollout>& rollouts, int system) {
    for (std::size_t i = 0; i < rollouts.size(); ++i) {
      const Rollout& r = rollouts[i];
      for (int k = horizon - 1; k >= 0; --k) {
        batch.x_mat.col(c) = r.states.col(k + 1);
        batch.z_mat.col(c).head(n) = r.states.col(k);
        batch.z_mat.col(c).tail(p) = r.inputs.col(k);
        batch.w_mat.col(c) = r.noises.col(k);
        if (system == 1) {
          batch.delta_mat.col(c) = delta_theta[static_cast<std::size_t>(k)] * batch.z_mat.col(c);
        }
        batch.tags.push_back({system, static_cast<int>(i), k});
        ++c;
      }
    }
  };
  fill(true_rollouts, 0);
  fill(aux_rollouts, 1);
  return batch;
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

double parse_double(const std::string& s, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ConfigError(std::string("rollout csv: bad ") + what + " value '" + s + "'");
  }
  return v;
}

void write_rollouts(std::ofstream& out, const std::vector<Rollout>& rollouts, int system) {
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    const Rollout& r = rollouts[i];
    const int horizon = static_cast<int>(r.inputs.cols());
    for (int k = 0; k <= horizon; ++k) {
      out << system << ',' << i << ',' << k;
      for (Index j = 0; j < r.states.rows(); ++j) out << ',' << format_double(r.states(j, k));
      if (k < horizon) {
        for (Index j = 0; j < r.inputs.rows(); ++j) out << ',' << format_double(r.inputs(j, k));
        for (Index j = 0; j < r.noises.rows(); ++j) out << ',' << format_double(r.noises(j, k));
      } else {
        for (Index j = 0; j < r.inputs.rows() + r.noises.rows(); ++j) out << ',';
      }
      out << '\n';
    }
  }
}

}  // namespace

void save_rollouts_csv(const std::string& path, const RolloutSet& set) {
  if (set.true_rollouts.empty() && set.aux_rollouts.empty()) {
    throw ConfigError("save_rollouts_csv: nothing to write");
  }
  const Rollout& first =
      set.true_rollouts.empty() ? set.aux_rollouts.front() : set.true_rollouts.front();
  const Index n = first.states.rows();
  const Index p = first.inputs.rows();

  std::ofstream out(path);
  if (!out) throw IoError("save_rollouts_csv: cannot open " + path + " for writing");
  out << "system,rollout,k";
  for (Index j = 1; j <= n; ++j) out << ",x_" << j;
  for (Index j = 1; j <= p; ++j) out << ",u_" << j;
  for (Index j = 1; j <= n; ++j) out << ",w_" << j;
  out << '\n';
  write_rollouts(out, set.true_rollouts, 0);
  write_rollouts(out, set.aux_rollouts, 1);
  if (!out) throw IoError("save_rollouts_csv: write failed for " + path);
}

RolloutSet load_rollouts_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_rollouts_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("rollout csv: empty file");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "system" || header[1] != "rollout" || header[2] != "k") {
    throw ConfigError("rollout csv: unexpected header");
  }
  Index n = 0, p = 0;
  std::size_t idx = 3;
  while (idx < header.size() && header[idx] == "x_" + std::to_string(n + 1)) ++idx, ++n;
  while (idx < header.size() && header[idx] == "u_" + std::to_string(p + 1)) ++idx, ++p;
  Index n2 = 0;
  while (idx < header.size() && header[idx] == "w_" + std::to_string(n2 + 1)) ++idx, ++n2;
  if (n == 0 || n2 != n || idx != header.size()) {
    throw ConfigError("rollout csv: malformed column header");
  }

  struct Row {
    Vector x;
    Vector u;
    Vector w;
    bool has_uw = false;
  };
  std::map<std::pair<int, int>, std::map<int, Row>> grouped;  // (system, rollout) -> k -> row
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (static_cast<Index>(f.size()) != 3 + 2 * n + p) {
      throw ConfigError("rollout csv: wrong field count in row");
    }
    const int system = static_cast<int>(parse_double(f[0], "system"));
    const int rollout = static_cast<int>(parse_double(f[1], "rollout"));
    const int k = static_cast<int>(parse_double(f[2], "k"));
    if (system != 0 && system != 1) throw ConfigError("rollout csv: system must be 0 or 1");

    Row row;
    row.x.resize(n);
    for (Index j = 0; j < n; ++j) row.x(j) = parse_double(f[3 + j], "state");
    const bool empty_uw = f[3 + n].empty();
    if (!empty_uw) {
      row.u.resize(p);
      row.w.resize(n);
      for (Index j = 0; j < p; ++j) row.u(j) = parse_double(f[3 + n + j], "input");
      for (Index j = 0; j < n; ++j) row.w(j) = parse_double(f[3 + n + p + j], "noise");
      row.has_uw = true;
    }
    if (!grouped[{system, rollout}].emplace(k, std::move(row)).second) {
      throw ConfigError("rollout csv: duplicate (system, rollout, k) row");
    }
  }
  if (grouped.empty()) throw ConfigError("rollout csv: no data rows");

  RolloutSet set;
  int horizon = -1;
  std::pair<int, int> expected[2] = {{0, 0}, {1, 0}};  // next (system, index)
  for (const auto& [key, rows] : grouped) {
    const auto [system, index] = key;
    if (index != expected[system].second) {
      throw ConfigError("rollout csv: rollout indices must be contiguous from 0");
    }
    ++expected[system].second;

    const int t = static_cast<int>(rows.size()) - 1;
    if (t < 1) throw ConfigError("rollout csv: rollout shorter than one step");
    if (horizon < 0) horizon = t;
    if (t != horizon) throw ShapeError("rollout csv: mixed horizons");

    Rollout r;
    r.states.resize(n, t + 1);
    r.inputs.resize(p, t);
    r.noises.resize(n, t);
    for (int k = 0; k <= t; ++k) {
      const auto it = rows.find(k);
      if (it == rows.end()) throw ConfigError("rollout csv: missing time step in rollout");
      const Row& row = it->second;
      r.states.col(k) = row.x;
      if (k < t) {
        if (!row.has_uw) throw ConfigError("rollout csv: missing input/noise before final step");
        r.inputs.col(k) = row.u;
        r.noises.col(k) = row.w;
      } else if (row.has_uw) {
        throw ConfigError("rollout csv: unexpected input/noise on final step");
      }
    }
    (system == 0 ? set.true_rollouts : set.aux_rollouts).push_back(std::move(r));
  }
  return set;
}

}  // namespace sysid
