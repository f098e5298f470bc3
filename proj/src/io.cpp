#include "tailbin/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "tailbin/error.hpp"

namespace tailbin {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

double require_double(const std::string& s, std::size_t line, const std::string& column) {
  const auto v = parse_double(s);
  if (!v) throw InputError("row " + std::to_string(line) + ": column " + column + " is not a number");
  return *v;
}

int require_outcome(const std::string& s, std::size_t line) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  const auto v = parse_double(s);
  if (v && (*v == 0.0 || *v == 1.0)) return static_cast<int>(*v);
  throw InputError("row " + std::to_string(line) + ": y must be 0 or 1");
}

void expect_prefix(const CsvTable& t, const std::vector<std::string>& names) {
  if (t.header.size() < names.size()) {
    throw InputError("header must start with " + fmt::format("{}", fmt::join(names, ",")));
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (t.header[i] != names[i]) {
      throw InputError("header column " + std::to_string(i + 1) + " must be '" + names[i] + "', found '" +
                       t.header[i] + "'");
    }
  }
  for (std::size_t i = names.size(); i < t.header.size(); ++i) {
    const std::string want = "z" + std::to_string(i - names.size() + 1);
    if (t.header[i] != want) {
      throw InputError("header column " + std::to_string(i + 1) + " must be '" + want + "'");
    }
  }
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    if (!have_header) {
      t.header = split(line);
      have_header = true;
      continue;
    }
    auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw InputError("row " + std::to_string(n) + ": expected " + std::to_string(t.header.size()) +
                       " cells, found " + std::to_string(cells.size()));
    }
    t.rows.push_back(std::move(cells));
    t.line.push_back(n);
  }
  if (!have_header) throw InputError("CSV input is empty");
  return t;
}

CsvLoad cross_section_from_csv(const CsvTable& table) {
  expect_prefix(table, {"y", "x"});
  const std::size_t k = table.header.size() - 2;
  CsvLoad load;
  std::vector<int> y;
  std::vector<double> x;
  std::vector<std::vector<double>> z;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line[r];
    if (row[0].empty() || row[1].empty()) {
      ++load.excluded;
      continue;
    }
    const int yy = require_outcome(row[0], line);
    const double xx = require_double(row[1], line, "x");
    if (!(xx > 0.0) || !std::isfinite(xx)) throw InputError("row " + std::to_string(line) + ": x must be positive");
    std::vector<double> zz(k);
    for (std::size_t j = 0; j < k; ++j) zz[j] = require_double(row[2 + j], line, table.header[2 + j]);
    y.push_back(yy);
    x.push_back(xx);
    z.push_back(std::move(zz));
  }
  if (y.empty()) throw InputError("no complete rows");
  const auto n = static_cast<Eigen::Index>(y.size());
  if (k == 0) {
    load.data = CrossSection::with_constant_z(std::move(y), std::move(x));
  } else {
    load.data.y = std::move(y);
    load.data.x = std::move(x);
    load.data.z.resize(n, static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) load.data.z(i, static_cast<Eigen::Index>(j)) = z[static_cast<std::size_t>(i)][j];
    }
  }
  return load;
}

PanelLoad panel_from_csv(const CsvTable& table) {
  expect_prefix(table, {"unit", "t", "y", "x"});
  const std::size_t k = table.header.size() - 4;
  struct Row {
    long t;
    int y;
    double x;
    std::vector<double> z;
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<Row>> by_unit;
  PanelLoad load;
  long t_min = std::numeric_limits<long>::max();
  long t_max = std::numeric_limits<long>::min();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line[r];
    if (row[0].empty()) throw InputError("row " + std::to_string(line) + ": unit is empty");
    const double tv = require_double(row[1], line, "t");
    if (tv != std::floor(tv)) throw InputError("row " + std::to_string(line) + ": t must be an integer");
    const long t = static_cast<long>(tv);
    if (row[2].empty() || row[3].empty()) {
      ++load.excluded;
      continue;
    }
    Row rec{t, require_outcome(row[2], line), require_double(row[3], line, "x"), std::vector<double>(k)};
    if (!(rec.x > 0.0) || !std::isfinite(rec.x)) {
      throw InputError("row " + std::to_string(line) + ": x must be positive");
    }
    for (std::size_t j = 0; j < k; ++j) rec.z[j] = require_double(row[4 + j], line, table.header[4 + j]);
    auto [it, inserted] = by_unit.try_emplace(row[0]);
    if (inserted) order.push_back(row[0]);
    for (const auto& prev : it->second) {
      if (prev.t == t) throw InputError("row " + std::to_string(line) + ": duplicate period for unit " + row[0]);
    }
    it->second.push_back(std::move(rec));
    t_min = std::min(t_min, t);
    t_max = std::max(t_max, t);
  }
  if (order.empty()) throw InputError("no complete rows");
  const auto periods = static_cast<std::size_t>(t_max - t_min + 1);
  load.first_t = t_min;
  for (const auto& id : order) {
    const auto& rows = by_unit[id];
    PanelUnit u;
    u.id = id;
    u.y.assign(periods, -1);
    u.x.assign(periods, std::numeric_limits<double>::quiet_NaN());
    Matrix zt = Matrix::Zero(static_cast<Eigen::Index>(periods), static_cast<Eigen::Index>(std::max<std::size_t>(k, 1)));
    if (k == 0) zt.setOnes();
    bool varies = false;
    for (const auto& r : rows) {
      const auto p = static_cast<std::size_t>(r.t - t_min);
      u.y[p] = r.y;
      u.x[p] = r.x;
      for (std::size_t j = 0; j < k; ++j) {
        zt(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = r.z[j];
        if (r.z[j] != rows.front().z[j]) varies = true;
      }
    }
    if (varies) {
      // Missing periods borrow the first observed z so rows stay finite.
      for (std::size_t p = 0; p < periods; ++p) {
        if (!u.observed(p)) {
          for (std::size_t j = 0; j < k; ++j) zt(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(j)) = rows.front().z[j];
        }
      }
      u.z_t = std::move(zt);
    } else if (k == 0) {
      u.z = Vector::Ones(1);
    } else {
      u.z = Eigen::Map<const Vector>(rows.front().z.data(), static_cast<Eigen::Index>(k));
    }
    load.panel.units.push_back(std::move(u));
  }
  return load;
}

ForecastSet forecasts_from_csv(const CsvTable& table) {
  if (table.header.size() < 3 || table.header[0] != "unit" || table.header[1] != "p_hat" ||
      table.header[2] != "y_realized") {
    throw InputError("forecast file header must be unit,p_hat,y_realized");
  }
  ForecastSet fs;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.line[r];
    if (row[2].empty()) continue;
    const double p = require_double(row[1], line, "p_hat");
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("row " + std::to_string(line) + ": p_hat must lie in [0,1]");
    fs.records.push_back({row[0], p, require_outcome(row[2], line)});
  }
  return fs;
}

// ---------------------------------------------------------------------------
// JSON artifacts
// ---------------------------------------------------------------------------

namespace {

json vec_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  }
  return a;
}

double num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw InputError("artifact holds a non-numeric value where a number is expected");
  return j.get<double>();
}

Vector json_vec(const json& j) {
  if (!j.is_array()) throw InputError("artifact field is not an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = num(j[i]);
  return v;
}

Matrix json_mat(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw InputError("artifact covariance has the wrong size");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = num(j[static_cast<std::size_t>(i * cols + c)]);
  }
  return m;
}

const json& field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw InputError(std::string("artifact is missing '") + name + "'");
  return j.at(name);
}

void expect_model(const json& j, const std::string& model) {
  const std::string got = field(j, "model").get<std::string>();
  if (got != model) throw InputError("artifact model is '" + got + "', expected '" + model + "'");
}

json base_artifact(const std::string& model) {
  json j;
  j["model"] = model;
  j["spec_version"] = kSpecVersion;
  j["seed"] = nullptr;
  return j;
}

const char* method_name(CsMethod m) {
  switch (m) {
    case CsMethod::kMle: return "mle";
    case CsMethod::kHill: return "hill";
    case CsMethod::kRankHalf: return "rank_half";
  }
  return "mle";
}

CsMethod method_from(const std::string& s) {
  if (s == "mle") return CsMethod::kMle;
  if (s == "hill") return CsMethod::kHill;
  if (s == "rank_half" || s == "rank-half") return CsMethod::kRankHalf;
  throw InputError("unknown cs method '" + s + "'");
}

const char* transform_name(FeTransform t) {
  switch (t) {
    case FeTransform::kLogTail: return "log_tail";
    case FeTransform::kRawAll: return "raw_all";
    case FeTransform::kRawTail: return "raw_tail";
  }
  return "log_tail";
}

FeTransform transform_from(const std::string& s) {
  if (s == "log_tail") return FeTransform::kLogTail;
  if (s == "raw_all") return FeTransform::kRawAll;
  if (s == "raw_tail") return FeTransform::kRawTail;
  throw InputError("unknown transform '" + s + "'");
}

Correction correction_from(const std::string& s) {
  if (s == "none") return Correction::kNone;
  if (s == "jackknife") return Correction::kJackknife;
  throw InputError("unknown correction '" + s + "'");
}

const char* correction_name(Correction c) { return c == Correction::kJackknife ? "jackknife" : "none"; }

}  // namespace

json to_json(const CsFit& fit) {
  json j = base_artifact("cs_tail");
  const Eigen::Index d = fit.theta[0].size();
  j["method"] = method_name(fit.method);
  j["params"] = {{"theta0", vec_json(fit.theta[0])}, {"theta1", vec_json(fit.theta[1])}};
  // Block-diagonal over (theta0, theta1).
  Matrix cov = Matrix::Zero(2 * d, 2 * d);
  cov.topLeftCorner(d, d) = fit.cov[0];
  cov.bottomRightCorner(d, d) = fit.cov[1];
  j["cov"] = mat_json(cov);
  j["thresholds"] = {fit.threshold[0], fit.threshold[1]};
  j["tail_counts"] = {fit.tail_count[0], fit.tail_count[1]};
  j["n"] = fit.n;
  if (fit.tailprob.kind == TailProbModel::Kind::kFrequency) {
    j["tailprob"] = {{"kind", "frequency"}, {"frequency", {fit.tailprob.frequency[0], fit.tailprob.frequency[1]}}};
  } else {
    j["tailprob"] = {{"kind", "logistic"},
                     {"coef0", vec_json(fit.tailprob.coef[0])},
                     {"coef1", vec_json(fit.tailprob.coef[1])}};
  }
  j["converged"] = fit.converged;
  return j;
}

CsFit cs_fit_from_json(const json& j) {
  expect_model(j, "cs_tail");
  CsFit fit;
  fit.method = method_from(field(j, "method").get<std::string>());
  const json& p = field(j, "params");
  fit.theta[0] = json_vec(field(p, "theta0"));
  fit.theta[1] = json_vec(field(p, "theta1"));
  const Eigen::Index d = fit.theta[0].size();
  const Matrix cov = json_mat(field(j, "cov"), 2 * d, 2 * d);
  fit.cov[0] = cov.topLeftCorner(d, d);
  fit.cov[1] = cov.bottomRightCorner(d, d);
  const json& th = field(j, "thresholds");
  const json& tc = field(j, "tail_counts");
  for (std::size_t y = 0; y < 2; ++y) {
    fit.threshold[y] = num(th.at(y));
    fit.tail_count[y] = tc.at(y).get<std::size_t>();
  }
  fit.n = field(j, "n").get<std::size_t>();
  const json& tp = field(j, "tailprob");
  if (field(tp, "kind").get<std::string>() == "frequency") {
    fit.tailprob.kind = TailProbModel::Kind::kFrequency;
    fit.tailprob.frequency = {num(field(tp, "frequency").at(0)), num(field(tp, "frequency").at(1))};
  } else {
    fit.tailprob.kind = TailProbModel::Kind::kLogistic;
    fit.tailprob.coef[0] = json_vec(field(tp, "coef0"));
    fit.tailprob.coef[1] = json_vec(field(tp, "coef1"));
  }
  fit.converged = field(j, "converged").get<bool>();
  return fit;
}

json to_json(const PanelFit& fit, const std::string& mode) {
  json j = base_artifact("panel_conditional");
  j["mode"] = mode;
  j["params"] = {{"theta_star", vec_json(fit.theta_star)}};
  j["cov"] = mat_json(fit.cov);
  j["threshold"] = fit.threshold;
  j["tail_counts"] = {{"contributing_units", fit.n_contributing}, {"units", fit.n_units}};
  j["bandwidth"] = fit.bandwidth;
  j["converged"] = fit.converged;
  return j;
}

PanelFit panel_fit_from_json(const json& j) {
  expect_model(j, "panel_conditional");
  PanelFit fit;
  fit.theta_star = json_vec(field(field(j, "params"), "theta_star"));
  const Eigen::Index d = fit.theta_star.size();
  fit.cov = json_mat(field(j, "cov"), d, d);
  fit.threshold = num(field(j, "threshold"));
  fit.n_contributing = field(field(j, "tail_counts"), "contributing_units").get<std::size_t>();
  fit.n_units = field(field(j, "tail_counts"), "units").get<std::size_t>();
  fit.bandwidth = num(field(j, "bandwidth"));
  fit.converged = field(j, "converged").get<bool>();
  return fit;
}

json to_json(const FeFit& fit) {
  json j = base_artifact("panel_fe");
  j["transform"] = transform_name(fit.transform);
  j["correction"] = correction_name(fit.correction);
  j["params"] = {{"theta_star", vec_json(fit.theta_star)}};
  j["cov"] = mat_json(fit.cov);
  j["threshold"] = fit.threshold;
  j["tail_counts"] = {{"observations", fit.n_obs}, {"retained_units", fit.a_tilde.size()}};
  json a = json::object();
  for (const auto& [id, v] : fit.a_tilde) a[id] = v;
  j["a_tilde"] = a;
  json dropped = json::array();
  for (const auto& d : fit.dropped_units) dropped.push_back({{"unit", d.id}, {"reason", d.reason}});
  j["dropped_units"] = dropped;
  j["converged"] = fit.converged;
  return j;
}

FeFit fe_fit_from_json(const json& j) {
  expect_model(j, "panel_fe");
  FeFit fit;
  fit.transform = transform_from(field(j, "transform").get<std::string>());
  fit.correction = correction_from(field(j, "correction").get<std::string>());
  fit.theta_star = json_vec(field(field(j, "params"), "theta_star"));
  const Eigen::Index d = fit.theta_star.size();
  fit.cov = json_mat(field(j, "cov"), d, d);
  fit.threshold = num(field(j, "threshold"));
  fit.n_obs = field(field(j, "tail_counts"), "observations").get<std::size_t>();
  for (const auto& [id, v] : field(j, "a_tilde").items()) fit.a_tilde[id] = num(v);
  for (const auto& d : field(j, "dropped_units")) {
    fit.dropped_units.push_back({field(d, "unit").get<std::string>(), field(d, "reason").get<std::string>()});
  }
  fit.converged = field(j, "converged").get<bool>();
  return fit;
}

json to_json(const DynFit& fit) {
  json j = base_artifact("panel_dynamic");
  j["params"] = {{"theta_00", vec_json(Vector::Zero(fit.theta_01.size()))},
                 {"theta_01", vec_json(fit.theta_01)},
                 {"theta_10", vec_json(fit.theta_10)},
                 {"theta_11", vec_json(fit.theta_11)}};
  j["normalization"] = "theta_00 = 0";
  j["cov"] = mat_json(fit.cov);
  j["threshold"] = fit.threshold;
  j["tail_counts"] = {{"windows", fit.n_windows}};
  j["hessian_rank"] = fit.hessian_rank;
  j["converged"] = fit.converged;
  return j;
}

DynFit dyn_fit_from_json(const json& j) {
  expect_model(j, "panel_dynamic");
  DynFit fit;
  const json& p = field(j, "params");
  fit.theta_01 = json_vec(field(p, "theta_01"));
  fit.theta_10 = json_vec(field(p, "theta_10"));
  fit.theta_11 = json_vec(field(p, "theta_11"));
  const Eigen::Index d = 3 * fit.theta_01.size();
  fit.cov = json_mat(field(j, "cov"), d, d);
  fit.threshold = num(field(j, "threshold"));
  fit.n_windows = field(field(j, "tail_counts"), "windows").get<std::size_t>();
  fit.hessian_rank = field(j, "hessian_rank").get<Eigen::Index>();
  fit.converged = field(j, "converged").get<bool>();
  return fit;
}

json to_json(const LogitFit& fit) {
  json j = base_artifact("logit");
  j["subset"] = fit.subset == Subset::kAll ? "all" : "tail";
  j["params"] = {{"beta", vec_json(fit.beta)}};
  j["cov"] = mat_json(fit.cov);
  j["thresholds"] = {fit.thresholds[0], fit.thresholds[1]};
  j["tail_counts"] = {{"observations", fit.n_used}};
  j["separation"] = fit.separation;
  j["converged"] = fit.converged;
  return j;
}

LogitFit logit_fit_from_json(const json& j) {
  expect_model(j, "logit");
  LogitFit fit;
  fit.subset = field(j, "subset").get<std::string>() == "all" ? Subset::kAll : Subset::kTail;
  fit.beta = json_vec(field(field(j, "params"), "beta"));
  fit.cov = json_mat(field(j, "cov"), fit.beta.size(), fit.beta.size());
  fit.thresholds = {num(field(j, "thresholds").at(0)), num(field(j, "thresholds").at(1))};
  fit.n_used = field(field(j, "tail_counts"), "observations").get<std::size_t>();
  fit.separation = field(j, "separation").get<bool>();
  fit.converged = field(j, "converged").get<bool>();
  return fit;
}

// ---------------------------------------------------------------------------
// Experiment configuration and tables
// ---------------------------------------------------------------------------

namespace {

std::vector<double> number_list(const json& j, const char* name) {
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) throw InputError(std::string(name) + " must hold numbers");
      out.push_back(v.get<double>());
    }
  } else {
    throw InputError(std::string(name) + " must be a number or an array of numbers");
  }
  return out;
}

std::size_t count_field(const json& j, const char* name) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw InputError(std::string(name) + " must be a non-negative integer");
  return j.get<std::size_t>();
}

}  // namespace

ExperimentConfig config_from_json(const json& j, ExperimentKind kind) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  ExperimentConfig c = default_config(kind);
  static const std::vector<std::string> known{"experiment", "alpha_x",        "alpha_eps",  "n",         "t",
                                              "reps",       "base_seed",      "seed",       "tail_q",    "eval_quantiles",
                                              "estimators", "cs_method",      "correction"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw InputError("unknown config field '" + key + "'");
  }
  if (j.contains("experiment")) {
    const std::string e = j.at("experiment").get<std::string>();
    const std::string want = kind == ExperimentKind::kExp1 ? "exp1" : "exp2";
    if (e != want) throw InputError("config experiment '" + e + "' does not match --experiment " + want);
  }
  if (!j.contains("alpha_x")) throw InputError("config is missing required field 'alpha_x'");
  if (!j.contains("alpha_eps")) throw InputError("config is missing required field 'alpha_eps'");
  c.alpha_x = number_list(j.at("alpha_x"), "alpha_x");
  c.alpha_eps = number_list(j.at("alpha_eps"), "alpha_eps");
  if (j.contains("n")) c.n = count_field(j.at("n"), "n");
  if (j.contains("t")) c.t = count_field(j.at("t"), "t");
  if (j.contains("reps")) c.reps = count_field(j.at("reps"), "reps");
  for (const char* key : {"base_seed", "seed"}) {
    if (j.contains(key)) {
      if (!j.at(key).is_number_unsigned()) throw InputError(std::string(key) + " must be a non-negative integer");
      c.base_seed = j.at(key).get<std::uint64_t>();
    }
  }
  if (j.contains("tail_q")) {
    if (!j.at("tail_q").is_number()) throw InputError("tail_q must be a number");
    c.tail_q = j.at("tail_q").get<double>();
  }
  if (j.contains("eval_quantiles")) c.eval_quantiles = number_list(j.at("eval_quantiles"), "eval_quantiles");
  if (j.contains("estimators")) {
    c.estimators.clear();
    for (const auto& e : j.at("estimators")) {
      if (!e.is_string()) throw InputError("estimators must be strings");
      c.estimators.push_back(e.get<std::string>());
    }
  }
  if (j.contains("cs_method")) c.cs_method = method_from(j.at("cs_method").get<std::string>());
  if (j.contains("correction")) c.correction = correction_from(j.at("correction").get<std::string>());
  try {
    c.validate();
  } catch (const Error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment == ExperimentKind::kExp1 ? "exp1" : "exp2";
  j["alpha_x"] = c.alpha_x;
  j["alpha_eps"] = c.alpha_eps;
  j["n"] = c.n;
  if (c.experiment == ExperimentKind::kExp2) j["t"] = c.t;
  j["reps"] = c.reps;
  j["base_seed"] = c.base_seed;
  j["tail_q"] = c.tail_q;
  if (c.experiment == ExperimentKind::kExp1) {
    j["eval_quantiles"] = c.eval_quantiles;
    j["cs_method"] = method_name(c.cs_method);
  } else {
    j["correction"] = correction_name(c.correction);
  }
  j["estimators"] = c.estimators;
  return j;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) return "NA";
  return fmt::format("{:.10g}", v);
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

}  // namespace

std::string summary_csv(const ExperimentResult& result) {
  std::string out = "experiment,alpha_x,alpha_eps,estimator,estimand,eval_point,bias,sd,rmse,n_ok\n";
  for (const auto& r : result.summary) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", r.experiment, format_number(r.alpha_x),
                       format_number(r.alpha_eps), r.estimator, r.estimand, r.eval_point ? format_number(*r.eval_point) : "",
                       r.stats ? format_number(r.stats->bias) : "NA", r.stats ? format_number(r.stats->sd) : "NA",
                       r.stats ? format_number(r.stats->rmse) : "NA", r.n_ok);
  }
  return out;
}

std::string lps_csv(const ExperimentResult& result) {
  std::string out = "alpha_x,alpha_eps,estimator,sum_lps,mean_lps,n_f,t_vs_tail,p_vs_tail\n";
  for (const auto& r : result.lps) {
    out += fmt::format("{},{},{},{},{},{},{},{}\n", format_number(r.alpha_x), format_number(r.alpha_eps), r.estimator,
                       opt(r.sum_lps), opt(r.mean_lps), opt(r.n_f), opt(r.t_vs_tail), opt(r.p_vs_tail));
  }
  return out;
}

std::string lps_reps_csv(const ExperimentResult& result) {
  std::string out = "alpha_x,alpha_eps,rep,estimator,sum_lps,mean_lps,n_f,t_vs_tail\n";
  for (const auto& cell : result.cells) {
    for (const auto& r : cell.lps_reps) {
      out += fmt::format("{},{},{},{},{},{},{},{}\n", format_number(r.alpha_x), format_number(r.alpha_eps), r.rep,
                         r.estimator, opt(r.sum_lps), opt(r.mean_lps), r.n_f, opt(r.t_vs_tail));
    }
  }
  return out;
}

}  // namespace tailbin
