#include "sysid/systems.hpp"

#include <fstream>
#include <utility>

#include <json.hpp>

#include "sysid/numerics.hpp"

namespace sysid {

namespace {

void validate_model(const SystemModel& m) {
  if (m.horizon < 1) throw ShapeError("SystemModel: horizon must be >= 1");
  if (m.a_seq.empty() || m.b_seq.empty()) throw ShapeError("SystemModel: empty matrix lists");
  const Index n = m.a_seq.front().rows();
  const Index p = m.b_seq.front().cols();
  if (n < 1) throw ShapeError("SystemModel: state dimension must be >= 1");
  for (const Matrix& a : m.a_seq) {
    if (a.rows() != n || a.cols() != n) throw ShapeError("SystemModel: A matrices must share dimension n x n");
    detail::require_finite(a, "SystemModel");
  }
  for (const Matrix& b : m.b_seq) {
    if (b.rows() != n || b.cols() != p) throw ShapeError("SystemModel: B matrices must share dimension n x p");
    detail::require_finite(b, "SystemModel");
  }
  if (!m.time_invariant) {
    if (static_cast<int>(m.a_seq.size()) < m.horizon || static_cast<int>(m.b_seq.size()) < m.horizon) {
      throw ShapeError("SystemModel: time-varying matrix lists shorter than horizon");
    }
  }
  // Zero input variance is allowed (degenerate simulations); the positive-
  // definiteness of the regressor covariance then no longer holds.
  if (m.sigma_u2 < 0.0 || !std::isfinite(m.sigma_u2)) {
    throw ShapeError("SystemModel: sigma_u2 must be nonnegative");
  }
  if (m.sigma_w2 < 0.0 || !std::isfinite(m.sigma_w2)) {
    throw ShapeError("SystemModel: sigma_w2 must be nonnegative");
  }
  if (m.sigma_x2 < 0.0 || !std::isfinite(m.sigma_x2)) {
    throw ShapeError("SystemModel: sigma_x2 must be nonnegative");
  }
}

}  // namespace

SystemModel SystemModel::lti(Matrix a, Matrix b, double sigma_u2, double sigma_w2,
                             double sigma_x2, int horizon) {
  SystemModel m;
  m.a_seq.push_back(std::move(a));
  m.b_seq.push_back(std::move(b));
  m.time_invariant = true;
  m.sigma_u2 = sigma_u2;
  m.sigma_w2 = sigma_w2;
  m.sigma_x2 = sigma_x2;
  m.horizon = horizon;
  validate_model(m);
  return m;
}

SystemModel SystemModel::ltv(std::vector<Matrix> a_seq, std::vector<Matrix> b_seq,
                             double sigma_u2, double sigma_w2, double sigma_x2, int horizon) {
  SystemModel m;
  m.a_seq = std::move(a_seq);
  m.b_seq = std::move(b_seq);
  m.time_invariant = false;
  m.sigma_u2 = sigma_u2;
  m.sigma_w2 = sigma_w2;
  m.sigma_x2 = sigma_x2;
  m.horizon = horizon;
  validate_model(m);
  return m;
}

const Matrix& SystemModel::a(int k) const {
  if (time_invariant) return a_seq.front();
  if (k < 0 || k >= static_cast<int>(a_seq.size())) {
    throw IndexError("SystemModel: A_k index out of range");
  }
  return a_seq[static_cast<std::size_t>(k)];
}

const Matrix& SystemModel::b(int k) const {
  if (time_invariant) return b_seq.front();
  if (k < 0 || k >= static_cast<int>(b_seq.size())) {
    throw IndexError("SystemModel: B_k index out of range");
  }
  return b_seq[static_cast<std::size_t>(k)];
}

Matrix transition(const SystemModel& model, int k, int l) {
  if (l < 0 || k < l) throw IndexError("transition: requires k >= l >= 0");
  const Index n = model.state_dim();
  Matrix phi = Matrix::Identity(n, n);
  for (int j = l; j < k; ++j) {
    phi = model.a(j) * phi;
  }
  return phi;
}

std::pair<Matrix, Matrix> gf_matrices(const SystemModel& model, int k) {
  if (k < 1) throw IndexError("gf_matrices: requires k >= 1");
  const Index n = model.state_dim();
  const Index p = model.input_dim();
  if (k == 1) return {Matrix(n, 0), Matrix(n, 0)};

  Matrix g(n, (k - 1) * p);
  Matrix f(n, (k - 1) * n);
  // Walk blocks right to left, accumulating Phi(k-1, j+1) = A_{k-2} ... A_{j+1}.
  Matrix phi = Matrix::Identity(n, n);
  for (int j = k - 2; j >= 0; --j) {
    g.middleCols(static_cast<Index>(j) * p, p) = phi * model.b(j);
    f.middleCols(static_cast<Index>(j) * n, n) = phi;
    if (j > 0) phi = phi * model.a(j);
  }
  return {std::move(g), std::move(f)};
}

Matrix step_covariance(const SystemModel& model, int k) {
  if (k < 0) throw IndexError("step_covariance: requires k >= 0");
  const Index n = model.state_dim();
  const Index p = model.input_dim();

  Matrix top;
  if (k == 0) {
    top = model.sigma_x2 * Matrix::Identity(n, n);
  } else {
    const auto [g, f] = gf_matrices(model, k + 1);
    const Matrix phi = transition(model, k, 0);
    top = model.sigma_u2 * g * g.transpose() + model.sigma_w2 * f * f.transpose() +
          model.sigma_x2 * phi * phi.transpose();
    top = 0.5 * (top + top.transpose()).eval();  // exact symmetry
  }

  Matrix cov = Matrix::Zero(n + p, n + p);
  cov.topLeftCorner(n, n) = top;
  cov.bottomRightCorner(p, p) = model.sigma_u2 * Matrix::Identity(p, p);
  return cov;
}

ModelDelta delta_norms(const SystemModel& true_model, const SystemModel& aux_model) {
  if (true_model.state_dim() != aux_model.state_dim() ||
      true_model.input_dim() != aux_model.input_dim() ||
      true_model.horizon != aux_model.horizon) {
    throw ShapeError("delta_norms: models must share n, p and horizon");
  }
  const Index n = true_model.state_dim();
  const Index p = true_model.input_dim();

  ModelDelta delta;
  delta.per_step.reserve(static_cast<std::size_t>(true_model.horizon));
  for (int k = 0; k < true_model.horizon; ++k) {
    Matrix d(n, n + p);
    d.leftCols(n) = aux_model.a(k) - true_model.a(k);
    d.rightCols(p) = aux_model.b(k) - true_model.b(k);
    const double norm = d.isZero(0.0) ? 0.0 : spectral_norm(d);
    delta.per_step.push_back(norm);
    delta.worst = std::max(delta.worst, norm);
  }
  return delta;
}

Matrix theta_matrix(const SystemModel& model) {
  const Index n = model.state_dim();
  const Index p = model.input_dim();
  Matrix theta(n, n + p);
  theta.leftCols(n) = model.a(0);
  theta.rightCols(p) = model.b(0);
  return theta;
}

namespace {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* key) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw ConfigError(std::string("model file: key '") + key + "' is not a matrix");
  }
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j.front().size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
      throw ConfigError(std::string("model file: ragged rows in '") + key + "'");
    }
    for (Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) {
        throw ConfigError(std::string("model file: non-numeric entry in '") + key + "'");
      }
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

bool is_matrix_list(const json& j) {
  return j.is_array() && !j.empty() && j.front().is_array() && !j.front().empty() &&
         j.front().front().is_array();
}

std::vector<Matrix> matrices_from_json(const json& j, const char* key) {
  std::vector<Matrix> out;
  if (is_matrix_list(j)) {
    for (const json& mj : j) out.push_back(matrix_from_json(mj, key));
  } else {
    out.push_back(matrix_from_json(j, key));
  }
  return out;
}

double number_field(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw ConfigError(std::string("model file: missing or non-numeric key '") + key + "'");
  }
  return j.at(key).get<double>();
}

}  // namespace

SystemModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_model: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("load_model: invalid JSON in " + path + ": " + e.what());
  }
  for (const char* key : {"n", "p", "T", "A", "B"}) {
    if (!j.contains(key)) throw ConfigError("load_model: missing key '" + std::string(key) + "'");
  }

  const int n = j.at("n").get<int>();
  const int p = j.at("p").get<int>();
  const int horizon = j.at("T").get<int>();
  const double su2 = number_field(j, "sigma_u2");
  const double sw2 = number_field(j, "sigma_w2");
  const double sx2 = number_field(j, "sigma_x2");

  const bool a_list = is_matrix_list(j.at("A"));
  const bool b_list = is_matrix_list(j.at("B"));
  if (a_list != b_list) {
    throw ConfigError("load_model: A and B must both be single matrices or both be lists");
  }
  std::vector<Matrix> a_seq = matrices_from_json(j.at("A"), "A");
  std::vector<Matrix> b_seq = matrices_from_json(j.at("B"), "B");

  for (const Matrix& a : a_seq) {
    if (a.rows() != n || a.cols() != n) throw ConfigError("load_model: A dimensions disagree with n");
  }
  for (const Matrix& b : b_seq) {
    if (b.rows() != n || b.cols() != p) throw ConfigError("load_model: B dimensions disagree with n, p");
  }

  if (a_list) {
    return SystemModel::ltv(std::move(a_seq), std::move(b_seq), su2, sw2, sx2, horizon);
  }
  return SystemModel::lti(std::move(a_seq.front()), std::move(b_seq.front()), su2, sw2, sx2, horizon);
}

void save_model(const SystemModel& model, const std::string& path) {
  json j;
  j["n"] = static_cast<int>(model.state_dim());
  j["p"] = static_cast<int>(model.input_dim());
  j["T"] = model.horizon;
  if (model.time_invariant) {
    j["A"] = matrix_to_json(model.a_seq.front());
    j["B"] = matrix_to_json(model.b_seq.front());
  } else {
    json a = json::array(), b = json::array();
    for (const Matrix& m : model.a_seq) a.push_back(matrix_to_json(m));
    for (const Matrix& m : model.b_seq) b.push_back(matrix_to_json(m));
    j["A"] = std::move(a);
    j["B"] = std::move(b);
  }
  j["sigma_u2"] = model.sigma_u2;
  j["sigma_w2"] = model.sigma_w2;
  j["sigma_x2"] = model.sigma_x2;

  std::ofstream out(path);
  if (!out) throw IoError("save_model: cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("save_model: write failed for " + path);
}

}  // namespace sysid
