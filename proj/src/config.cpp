#include "kshrink/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace kshrink {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::ostringstream os;
  os << "invalid configuration";
  for (const auto& p : parts) os << "\n  " << p;
  return os.str();
}

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char ch : s)
    if (ch != ' ' && ch != '\t') out.push_back(ch);
  return out;
}

bool read_number(const json& v, double& out) {
  if (!v.is_number()) return false;
  out = v.get<double>();
  return true;
}

template <class Int>
Int read_int(const json& obj, const char* key, const std::string& field, Int fallback,
             bool required, std::vector<std::string>& errors) {
  if (!obj.contains(key)) {
    if (required) errors.push_back(field + ": missing");
    return fallback;
  }
  const json& v = obj.at(key);
  if (!v.is_number_integer()) {
    errors.push_back(field + ": expected an integer");
    return fallback;
  }
  if constexpr (std::is_unsigned_v<Int>) {
    if (v.is_number_unsigned()) return v.get<Int>();
    const auto s = v.get<std::int64_t>();
    if (s < 0) {
      errors.push_back(field + ": must be >= 0");
      return fallback;
    }
    return static_cast<Int>(s);
  } else {
    return v.get<Int>();
  }
}

std::optional<double> read_opt_double(const json& obj, const char* key, const std::string& field,
                                      std::vector<std::string>& errors) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  double x = 0.0;
  if (!read_number(obj.at(key), x)) {
    errors.push_back(field + ": expected a number");
    return std::nullopt;
  }
  return x;
}

std::vector<Vector> parse_means(const json& value, int p, int k, const std::string& field,
                                std::vector<std::string>& errors) {
  std::vector<Vector> mu;
  if (!value.is_array()) {
    errors.push_back(field + ": expected an array");
    return mu;
  }
  if (static_cast<int>(value.size()) != k) {
    errors.push_back(field + ": expected " + std::to_string(k) + " entries, got " +
                     std::to_string(value.size()));
    return mu;
  }
  for (std::size_t i = 0; i < value.size(); ++i) {
    const std::string f = field + "[" + std::to_string(i + 1) + "]";
    const json& e = value[i];
    double m = 0.0;
    if (read_number(e, m)) {
      mu.push_back(Vector::Constant(p, m));
    } else if (e.is_array()) {
      Vector v(static_cast<Eigen::Index>(e.size()));
      bool ok = true;
      for (std::size_t j = 0; j < e.size(); ++j) ok = ok && read_number(e[j], v[j]);
      if (!ok) {
        errors.push_back(f + ": expected numbers");
      } else if (v.size() != p) {
        errors.push_back(f + ": expected length " + std::to_string(p) + ", got " +
                         std::to_string(v.size()));
      }
      mu.push_back(v);
    } else {
      errors.push_back(f + ": expected a number (multiple of j_p) or a vector");
    }
  }
  return mu;
}

bool is_scalar_identity(const Matrix& m, double& c) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  c = m(0, 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != (i == j ? c : 0.0)) return false;
  return true;
}

json matrix_to_json(const Matrix& m) {
  double c = 0.0;
  if (is_scalar_identity(m, c)) return c;
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

EstimatorConfig parse_estimator(const json& e, const std::string& field,
                                std::vector<std::string>& errors) {
  EstimatorConfig cfg;
  if (!e.is_object()) {
    errors.push_back(field + ": expected an object");
    return cfg;
  }
  if (!e.contains("kind") || !e.at("kind").is_string()) {
    errors.push_back(field + ".kind: missing");
    return cfg;
  }
  const auto kind = parse_kind(e.at("kind").get<std::string>());
  if (!kind) {
    errors.push_back(field + ".kind: unknown estimator '" + e.at("kind").get<std::string>() + "'");
    return cfg;
  }
  if (*kind == EstimatorKind::CLASS1 || *kind == EstimatorKind::CLASS2) {
    errors.push_back(field + ".kind: " + std::string(kind_name(*kind)) +
                     " takes a function and is only available through the library");
    return cfg;
  }
  cfg.kind = *kind;
  if (e.contains("label")) {
    if (e.at("label").is_string())
      cfg.label = e.at("label").get<std::string>();
    else
      errors.push_back(field + ".label: expected a string");
  }
  if (auto alpha = read_opt_double(e, "alpha", field + ".alpha", errors)) cfg.alpha = *alpha;
  cfg.a0 = read_opt_double(e, "a0", field + ".a0", errors);
  cfg.b0 = read_opt_double(e, "b0", field + ".b0", errors);
  const auto a = read_opt_double(e, "a", field + ".a", errors);
  const auto c = read_opt_double(e, "c", field + ".c", errors);
  const auto L = read_opt_double(e, "L", field + ".L", errors);
  if (a) {
    cfg.hb = HbParams{*a, c.value_or(1.0), L.value_or(0.0)};
  } else if (c || L) {
    errors.push_back(field + ".a: required when c or L is given");
  }
  if (e.contains("d")) {
    const json& d = e.at("d");
    if (!d.is_array()) {
      errors.push_back(field + ".d: expected an array");
    } else {
      for (const auto& w : d) {
        double x = 0.0;
        if (!read_number(w, x)) {
          errors.push_back(field + ".d: expected numbers");
          break;
        }
        cfg.d.push_back(x);
      }
    }
  }
  return cfg;
}

std::vector<EstimatorConfig> default_estimators() {
  std::vector<EstimatorConfig> out;
  for (auto kind : {EstimatorKind::PT, EstimatorKind::JS, EstimatorKind::EB, EstimatorKind::HB,
                    EstimatorKind::HEB}) {
    EstimatorConfig cfg;
    cfg.kind = kind;
    out.push_back(cfg);
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> messages)
    : std::invalid_argument(join(messages)), messages_(std::move(messages)) {}

Matrix parse_matrix(const json& value, int p, const std::string& field,
                    std::vector<std::string>& errors) {
  const Eigen::Index dim = std::max(p, 1);
  double c = 0.0;
  if (read_number(value, c)) return c * Matrix::Identity(dim, dim);
  if (value.is_string()) {
    const std::string s = strip_spaces(value.get<std::string>());
    if (s.size() > 2 && s.substr(s.size() - 2) == "*I") {
      try {
        std::size_t used = 0;
        c = std::stod(s.substr(0, s.size() - 2), &used);
        if (used == s.size() - 2) return c * Matrix::Identity(dim, dim);
      } catch (const std::exception&) {
      }
    }
    errors.push_back(field + ": cannot read '" + value.get<std::string>() +
                     "', expected c, \"c*I\" or a matrix");
    return Matrix();
  }
  if (value.is_array()) {
    const auto rows = static_cast<Eigen::Index>(value.size());
    Matrix m(rows, rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const json& row = value[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows) {
        errors.push_back(field + ": rows must be arrays of equal length (square matrix)");
        return Matrix();
      }
      for (Eigen::Index j = 0; j < rows; ++j) {
        if (!read_number(row[static_cast<std::size_t>(j)], m(i, j))) {
          errors.push_back(field + ": non-numeric entry");
          return Matrix();
        }
      }
    }
    return m;
  }
  errors.push_back(field + ": expected c, \"c*I\" or a matrix");
  return Matrix();
}

RunConfig parse_run_config(const json& doc) {
  std::vector<std::string> errors;
  RunConfig run;
  if (!doc.is_object()) throw ConfigError({"<root>: expected a JSON object"});
  if (!doc.contains("model") || !doc.at("model").is_object())
    throw ConfigError({"model: missing or not an object"});
  const json& model = doc.at("model");

  ModelSpec base;
  base.p = read_int<int>(model, "p", "model.p", 0, true, errors);
  base.k = read_int<int>(model, "k", "model.k", 0, true, errors);
  base.n = read_int<int>(model, "n", "model.n", 0, true, errors);
  if (auto s2 = read_opt_double(model, "sigma2", "model.sigma2", errors)) base.sigma2 = *s2;
  if (!errors.empty()) throw ConfigError(errors);

  if (!model.contains("V") || !model.at("V").is_array()) {
    errors.push_back("model.V: missing or not an array");
  } else {
    const json& vs = model.at("V");
    for (std::size_t i = 0; i < vs.size(); ++i)
      base.V.push_back(parse_matrix(vs[i], base.p, "model.V[" + std::to_string(i + 1) + "]", errors));
  }
  const json q = model.contains("Q") ? model.at("Q") : json("inverse_V1");
  if (q.is_string() && strip_spaces(q.get<std::string>()) == "inverse_V1") {
    if (!base.V.empty() && base.V.front().size() > 0) {
      try {
        base.Q = SpdMatrix(base.V.front()).inverse();
      } catch (const std::exception&) {
        errors.push_back("model.Q: inverse_V1 requested but V[1] is not positive definite");
      }
    }
  } else {
    base.Q = parse_matrix(q, base.p, "model.Q", errors);
  }

  std::vector<std::pair<std::string, std::vector<Vector>>> means;
  if (doc.contains("mean_configs")) {
    const json& mc = doc.at("mean_configs");
    if (!mc.is_array() || mc.empty()) {
      errors.push_back("mean_configs: expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < mc.size(); ++i) {
        const std::string f = "mean_configs[" + std::to_string(i + 1) + "]";
        if (!mc[i].is_object() || !mc[i].contains("mu")) {
          errors.push_back(f + ": expected an object with mu");
          continue;
        }
        std::string name = "config" + std::to_string(i + 1);
        if (mc[i].contains("name") && mc[i].at("name").is_string())
          name = mc[i].at("name").get<std::string>();
        means.emplace_back(name, parse_means(mc[i].at("mu"), base.p, base.k, f + ".mu", errors));
      }
    }
  } else if (model.contains("mu")) {
    means.emplace_back("default", parse_means(model.at("mu"), base.p, base.k, "model.mu", errors));
  } else {
    errors.push_back("model.mu: missing (give model.mu or mean_configs)");
  }

  std::vector<EstimatorConfig> estimators;
  if (doc.contains("estimators")) {
    const json& es = doc.at("estimators");
    if (!es.is_array() || es.empty()) {
      errors.push_back("estimators: expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < es.size(); ++i)
        estimators.push_back(parse_estimator(es[i], "estimators[" + std::to_string(i + 1) + "]", errors));
    }
  } else {
    estimators = default_estimators();
  }

  const auto reps = read_int<std::int64_t>(doc, "replications", "replications", 5000, false, errors);
  if (reps < 1) errors.push_back("replications: must be >= 1");
  const auto seed = read_int<std::uint64_t>(doc, "seed", "seed", 42, false, errors);
  bool crn = true;
  if (doc.contains("common_random_numbers")) {
    if (doc.at("common_random_numbers").is_boolean())
      crn = doc.at("common_random_numbers").get<bool>();
    else
      errors.push_back("common_random_numbers: expected true or false");
  }
  if (doc.contains("output")) {
    const json& out = doc.at("output");
    if (out.contains("path") && out.at("path").is_string()) run.output_path = out.at("path").get<std::string>();
    if (out.contains("format") && out.at("format").is_string())
      run.output_format = out.at("format").get<std::string>();
    if (run.output_format != "csv" && run.output_format != "json")
      errors.push_back("output.format: expected csv or json");
  }
  if (!errors.empty()) {
    // Model-level problems are reported together with the structural ones,
    // as long as the model block itself parsed.
    const bool model_parsed = std::none_of(errors.begin(), errors.end(), [](const std::string& e) {
      return e.rfind("model.", 0) == 0;
    });
    if (model_parsed) {
      ModelSpec probe = base;
      if (!means.empty()) probe.mu = means.front().second;
      for (const auto& issue : validate_spec(probe))
        if (issue.field.rfind("mu", 0) != 0) errors.push_back("model." + issue.field + ": " + issue.message);
    }
    throw ConfigError(errors);
  }

  for (auto& [name, mu] : means) {
    SimPlan plan;
    plan.spec = base;
    plan.spec.mu = std::move(mu);
    plan.replications = reps;
    plan.seed = seed;
    plan.common_random_numbers = crn;
    plan.estimators = estimators;
    for (const auto& issue : validate_spec(plan.spec)) {
      std::string field = issue.field == "mu" || issue.field.rfind("mu[", 0) == 0
                              ? name + "." + issue.field
                              : "model." + issue.field;
      errors.push_back(field + ": " + issue.message);
    }
    if (errors.empty()) {
      try {
        plan.estimators = resolve_estimators(plan);
      } catch (const std::exception& e) {
        errors.push_back(std::string("estimators: ") + e.what());
      }
    }
    if (!errors.empty()) break;
    run.plans.push_back({name, std::move(plan)});
  }
  if (!errors.empty()) throw ConfigError(errors);
  return run;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open"});
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return parse_run_config(doc);
}

json model_to_json(const ModelSpec& spec) {
  json m;
  m["p"] = spec.p;
  m["k"] = spec.k;
  m["n"] = spec.n;
  m["sigma2"] = spec.sigma2;
  json vs = json::array();
  for (const auto& v : spec.V) vs.push_back(matrix_to_json(v));
  m["V"] = vs;
  m["Q"] = matrix_to_json(spec.Q);
  json mu = json::array();
  for (const auto& v : spec.mu) mu.push_back(vector_to_json(v));
  m["mu"] = mu;
  return m;
}

json estimator_to_json(const EstimatorConfig& config) {
  json e;
  e["kind"] = std::string(kind_name(config.kind));
  if (!config.label.empty()) e["label"] = config.label;
  switch (config.kind) {
    case EstimatorKind::PT:
      e["alpha"] = config.alpha;
      break;
    case EstimatorKind::EB:
    case EstimatorKind::HEB:
    case EstimatorKind::LINCOMB:
      if (config.a0) e["a0"] = *config.a0;
      if (config.b0) e["b0"] = *config.b0;
      break;
    case EstimatorKind::HB:
      if (config.hb) {
        e["a"] = config.hb->a;
        e["c"] = config.hb->c;
        e["L"] = config.hb->L;
      }
      break;
    default:
      break;
  }
  if (!config.d.empty()) e["d"] = config.d;
  return e;
}

json to_json(const RunConfig& config) {
  json doc;
  if (config.plans.empty()) return doc;
  const SimPlan& first = config.plans.front().plan;
  json model = model_to_json(first.spec);
  model.erase("mu");
  doc["model"] = model;
  json mcs = json::array();
  for (const auto& np : config.plans) {
    json mu = json::array();
    for (const auto& v : np.plan.spec.mu) mu.push_back(vector_to_json(v));
    mcs.push_back({{"name", np.name}, {"mu", mu}});
  }
  doc["mean_configs"] = mcs;
  json es = json::array();
  for (const auto& e : first.estimators) es.push_back(estimator_to_json(e));
  doc["estimators"] = es;
  doc["replications"] = first.replications;
  doc["seed"] = first.seed;
  doc["common_random_numbers"] = first.common_random_numbers;
  json out;
  if (!config.output_path.empty()) out["path"] = config.output_path;
  out["format"] = config.output_format;
  doc["output"] = out;
  return doc;
}

}  // namespace kshrink
