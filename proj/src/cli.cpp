#include "kshrink/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kshrink/config.hpp"

namespace kshrink::cli {

using nlohmann::json;

namespace {

std::string fmt_g(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool to_double(const std::string& s, double& x) {
  if (s.empty()) return false;
  try {
    std::size_t used = 0;
    x = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::string join_vector(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_g(v[i], 10);
  }
  return out;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json condition_json(const RootCondition& rc) {
  return {{"trace", rc.trace}, {"chmax", rc.chmax}, {"ratio", rc.ratio},
          {"condition_holds", rc.holds}};
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string preset;
  std::string config;
  std::int64_t reps = -1;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::string out;
  std::string format;
  unsigned workers = 1;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig run;
  try {
    if (a.preset.empty() == a.config.empty())
      throw ConfigError({"give exactly one of --preset or --config"});
    if (a.reps == 0 || a.reps < -1) throw ConfigError({"--reps: must be >= 1"});
    if (a.alpha && !(*a.alpha > 0.0 && *a.alpha < 1.0))
      throw ConfigError({"--alpha: must lie in (0, 1)"});
    if (!a.format.empty() && a.format != "csv" && a.format != "json")
      throw ConfigError({"--format: expected csv or json"});
    if (a.workers < 1) throw ConfigError({"--workers: must be >= 1"});
    if (!a.preset.empty()) {
      if (a.preset != "table1") throw ConfigError({"--preset: unknown preset '" + a.preset + "'"});
      run.plans = table1_preset(a.reps > 0 ? a.reps : 5000, a.seed.value_or(42),
                                a.alpha.value_or(0.05));
    } else {
      run = load_run_config(a.config);
      for (auto& np : run.plans) {
        if (a.reps > 0) np.plan.replications = a.reps;
        if (a.seed) np.plan.seed = *a.seed;
        if (a.alpha)
          for (auto& e : np.plan.estimators)
            if (e.kind == EstimatorKind::PT) e.alpha = *a.alpha;
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  const std::string format = !a.format.empty() ? a.format : run.output_format;
  const std::string path = !a.out.empty() ? a.out : run.output_path;
  try {
    std::vector<NamedReport> reports;
    reports.reserve(run.plans.size());
    for (const auto& np : run.plans) reports.emplace_back(np.name, simulate_risk(np.plan, a.workers));
    write_output(format == "json" ? report_json(reports).dump(2) + "\n" : report_csv(reports),
                 path, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

// --- check ------------------------------------------------------------------

struct CheckArgs {
  std::string preset;
  std::string config;
  std::vector<double> weights;
};

int cmd_check(const CheckArgs& a, std::ostream& out, std::ostream& err) {
  ModelSpec spec;
  try {
    if (a.preset.empty() == a.config.empty())
      throw ConfigError({"give exactly one of --preset or --config"});
    if (!a.preset.empty()) {
      if (a.preset != "table1") throw ConfigError({"--preset: unknown preset '" + a.preset + "'"});
      spec = table1_preset(1).front().plan.spec;
    } else {
      std::ifstream in(a.config);
      if (!in) throw ConfigError({a.config + ": cannot open"});
      json doc = json::parse(in, nullptr, true, true);
      // Estimator defaults are not needed here and may be unresolvable
      // exactly when the conditions fail, so only the model is read.
      if (!doc.is_object()) throw ConfigError({"<root>: expected a JSON object"});
      doc.erase("estimators");
      doc["estimators"] = json::array({json{{"kind", "JS"}}});
      json& model = doc["model"];
      if (model.is_object() && !doc.contains("mean_configs") && !model.contains("mu") &&
          model.contains("k") && model["k"].is_number_integer() && model["k"].get<int>() > 0)
        model["mu"] = json::array_t(model["k"].get<std::size_t>(), 0.0);
      spec = parse_run_config(doc).plans.front().plan.spec;
    }
    if (!a.weights.empty() && a.weights.size() != static_cast<std::size_t>(spec.k))
      throw ConfigError({"--weights: expected " + std::to_string(spec.k) + " values"});
  } catch (const json::exception& e) {
    err << "error: " << a.config << ": " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const Design design = Design::from_spec(spec);
    const SpdMatrix q(spec.Q);
    json doc;
    const MinimaxReport t1 = theorem1_report(design, q);
    const MinimaxReport t2 = theorem2_report(design, q);
    doc["theorem1"] = minimax_json(t1);
    doc["theorem2"] = minimax_json(t2);
    bool holds = t1.condition_holds() && t2.condition_holds();
    if (!a.weights.empty()) {
      const MinimaxReport t3 = theorem3_report(design, q, a.weights);
      doc["theorem3"] = minimax_json(t3);
      doc["theorem3"]["weights"] = a.weights;
      holds = holds && t3.condition_holds();
    }
    try {
      doc["hb_a"] = solve_hb_a(design, q);
    } catch (const std::domain_error& e) {
      doc["hb_a"] = nullptr;
      doc["hb_a_error"] = e.what();
    }
    doc["conditions_hold"] = holds;
    out << doc.dump(2) << "\n";
    return holds ? kOk : kConditionFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

// --- estimate ---------------------------------------------------------------

struct EstimateArgs {
  std::string data;
  std::vector<std::string> estimators{"PT", "JS", "EB", "HB", "HEB"};
  double alpha = 0.05;
  std::optional<double> a0;
  std::optional<double> b0;
  std::optional<double> hb_a;
  double hb_c = 1.0;
  double hb_L = 0.0;
  std::string format = "text";
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  EstimateData data;
  std::vector<EstimatorConfig> configs;
  try {
    std::ifstream in(a.data);
    if (!in) throw ConfigError({a.data + ": cannot open"});
    data = parse_estimate_data(in);
    if (a.format != "text" && a.format != "json")
      throw ConfigError({"--format: expected text or json"});
    for (const auto& name : a.estimators) {
      const auto kind = parse_kind(name);
      if (!kind || *kind == EstimatorKind::CLASS1 || *kind == EstimatorKind::CLASS2 ||
          *kind == EstimatorKind::LINCOMB)
        throw ConfigError({"--estimators: unsupported estimator '" + name + "'"});
      EstimatorConfig cfg;
      cfg.kind = *kind;
      cfg.alpha = a.alpha;
      cfg.a0 = a.a0;
      if (*kind == EstimatorKind::HEB) cfg.b0 = a.b0;
      if (*kind == EstimatorKind::HB && a.hb_a) cfg.hb = HbParams{*a.hb_a, a.hb_c, a.hb_L};
      configs.push_back(cfg);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    std::vector<SpdMatrix> v;
    for (const auto& m : data.V) v.emplace_back(m);
    const Design design(std::move(v), data.n);
    const SpdMatrix q(data.Q);
    const PooledStats st = pooled_stats(data.sample, design);

    json doc;
    doc["p"] = design.p();
    doc["k"] = design.k();
    doc["n"] = design.n();
    doc["F"] = st.F;
    doc["G"] = st.G;
    doc["nu_hat"] = vector_json(st.nu_hat);
    std::ostringstream text;
    text << "p = " << design.p() << ", k = " << design.k() << ", n = " << design.n() << "\n";
    text << "F = " << fmt_g(st.F, 10) << "\n";
    text << "G = " << fmt_g(st.G, 10) << "\n";
    text << "nu_hat = " << join_vector(st.nu_hat) << "\n";
    json estimates = json::object();
    for (const auto& cfg : configs) {
      const std::string name = cfg.display_name();
      try {
        const Estimator est(with_minimax_defaults(cfg, design, q), design);
        const Vector value = est.estimate(data.sample, st);
        estimates[name] = vector_json(value);
        text << name << " = " << join_vector(value) << "\n";
      } catch (const std::exception& e) {
        estimates[name] = {{"error", e.what()}};
        text << name << " = n/a (" << e.what() << ")\n";
      }
    }
    doc["estimates"] = estimates;
    out << (a.format == "json" ? doc.dump(2) + "\n" : text.str());
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

}  // namespace

std::string report_csv(const std::vector<NamedReport>& reports) {
  std::ostringstream os;
  os << "mean_config,estimator,risk,risk_se,prial,prial_se,replications,seed\n";
  for (const auto& [name, r] : reports) {
    for (const auto& e : r.estimators) {
      os << csv_field(name) << ',' << csv_field(e.label) << ',' << fmt_g(e.risk, 6) << ','
         << fmt_g(e.std_error, 6) << ',' << fmt_g(e.prial, 6) << ',' << fmt_g(e.prial_std_error, 6)
         << ',' << r.replications << ',' << r.seed << '\n';
    }
  }
  return os.str();
}

json report_json(const std::vector<NamedReport>& reports) {
  json out = json::array();
  for (const auto& [name, r] : reports) {
    json ests = json::array();
    for (const auto& e : r.estimators) {
      ests.push_back({{"estimator", e.label},
                      {"risk", e.risk},
                      {"risk_se", e.std_error},
                      {"prial", e.prial},
                      {"prial_se", e.prial_std_error}});
    }
    out.push_back({{"mean_config", name},
                   {"baseline_risk", r.baseline_risk},
                   {"baseline_risk_se", r.baseline_std_error},
                   {"trace_V1Q", r.trace_v1q},
                   {"replications", r.replications},
                   {"seed", r.seed},
                   {"estimators", ests}});
  }
  return out;
}

json minimax_json(const MinimaxReport& r) {
  json j = condition_json(r.shrink);
  j["phi_upper_theorem1"] = r.phi_upper_theorem1;
  j["phi_upper_theorem2"] = r.phi_upper_theorem2;
  if (r.pooled) j["pooled"] = condition_json(*r.pooled);
  if (r.psi_upper_theorem2) j["psi_upper_theorem2"] = *r.psi_upper_theorem2;
  j["condition_holds"] = r.condition_holds();
  return j;
}

EstimateData parse_estimate_data(std::istream& in) {
  std::vector<std::string> errors;
  std::vector<std::vector<double>> rows;
  std::optional<double> s;
  std::optional<double> n;
  std::vector<double> v_scalars;
  std::map<int, std::vector<double>> v_full;
  std::vector<double> q_values;

  std::string line;
  int line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "line " + std::to_string(line_no);
    auto numbers = [&](std::size_t from) {
      std::vector<double> xs;
      for (std::size_t i = from; i < fields.size(); ++i) {
        double x = 0.0;
        if (!to_double(fields[i], x)) {
          errors.push_back(where + ": '" + fields[i] + "' is not a number");
          return std::vector<double>{};
        }
        xs.push_back(x);
      }
      return xs;
    };
    double first = 0.0;
    const std::string& key = fields.front();
    if (to_double(key, first)) {
      rows.push_back(numbers(0));
    } else if (key == "S") {
      const auto xs = numbers(1);
      if (xs.size() != 1) errors.push_back(where + ": S takes one value");
      else s = xs.front();
    } else if (key == "n") {
      const auto xs = numbers(1);
      if (xs.size() != 1) errors.push_back(where + ": n takes one value");
      else n = xs.front();
    } else if (key == "V") {
      v_scalars = numbers(1);
    } else if (key.size() > 1 && key[0] == 'V' &&
               key.find_first_not_of("0123456789", 1) == std::string::npos) {
      v_full[std::stoi(key.substr(1))] = numbers(1);
    } else if (key == "Q") {
      q_values = numbers(1);
    } else if (!seen_content) {
      // header row
    } else {
      errors.push_back(where + ": unknown key '" + key + "'");
    }
    seen_content = true;
  }

  EstimateData data;
  if (rows.size() < 2) errors.push_back("data: need at least two sample rows (k >= 2)");
  const std::size_t p = rows.empty() ? 0 : rows.front().size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != p)
      errors.push_back("row " + std::to_string(i + 1) + ": has " + std::to_string(rows[i].size()) +
                       " values, expected " + std::to_string(p));
  }
  if (!s) errors.push_back("S: missing");
  else if (!(*s > 0.0)) errors.push_back("S: must be > 0");
  if (!n) errors.push_back("n: missing");
  else if (!(*n >= 1.0) || *n != std::floor(*n)) errors.push_back("n: must be a positive integer");
  if (!errors.empty()) throw ConfigError(errors);

  const auto pi = static_cast<Eigen::Index>(p);
  const auto k = rows.size();
  for (const auto& r : rows) data.sample.X.push_back(Eigen::Map<const Vector>(r.data(), pi));
  data.sample.S = *s;
  data.n = static_cast<int>(*n);

  auto square = [&](const std::vector<double>& xs, const std::string& what) -> Matrix {
    if (xs.size() == 1) return xs.front() * Matrix::Identity(pi, pi);
    if (xs.size() == p * p) return Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(xs.data(), pi, pi);
    errors.push_back(what + ": expected 1 or " + std::to_string(p * p) + " values");
    return Matrix::Identity(pi, pi);
  };
  if (!v_scalars.empty()) {
    if (v_scalars.size() != k)
      errors.push_back("V: expected " + std::to_string(k) + " scalars, got " + std::to_string(v_scalars.size()));
    for (double c : v_scalars) data.V.push_back(c * Matrix::Identity(pi, pi));
  } else if (!v_full.empty()) {
    for (std::size_t i = 1; i <= k; ++i) {
      const auto it = v_full.find(static_cast<int>(i));
      if (it == v_full.end()) {
        errors.push_back("V" + std::to_string(i) + ": missing");
        continue;
      }
      data.V.push_back(square(it->second, "V" + std::to_string(i)));
    }
  } else {
    errors.push_back("V: missing (give V,c_1,...,c_k or V1..Vk rows)");
  }
  if (!errors.empty()) throw ConfigError(errors);

  try {
    data.Q = q_values.empty() ? SpdMatrix(data.V.front()).inverse() : square(q_values, "Q");
    std::vector<SpdMatrix> checked;
    for (std::size_t i = 0; i < data.V.size(); ++i) {
      try {
        checked.emplace_back(data.V[i]);
      } catch (const std::exception& e) {
        errors.push_back("V" + std::to_string(i + 1) + ": " + e.what());
      }
    }
    SpdMatrix{data.Q};
  } catch (const std::exception& e) {
    errors.push_back(std::string("Q: ") + e.what());
  }
  if (!errors.empty()) throw ConfigError(errors);
  return data;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"k-sample minimax shrinkage estimation toward a pooled mean", "kshrink"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo risk and PRIAL of the estimators");
  simulate->add_option("--preset", sim.preset, "Built-in experiment (table1)");
  simulate->add_option("--config", sim.config, "JSON run configuration");
  simulate->add_option("--reps", sim.reps, "Replications");
  simulate->add_option("--seed", sim.seed, "Base seed");
  simulate->add_option("--alpha", sim.alpha, "Significance level of the PT estimator");
  simulate->add_option("--out", sim.out, "Output file (default standard output)");
  simulate->add_option("--format", sim.format, "csv or json");
  simulate->add_option("--workers", sim.workers, "Worker threads");

  CheckArgs chk;
  auto* check = app.add_subcommand("check", "Minimaxity conditions and bounds as JSON");
  check->add_option("--preset", chk.preset, "Built-in experiment (table1)");
  check->add_option("--config", chk.config, "JSON run configuration");
  check->add_option("--weights", chk.weights, "Weights d_1..d_k of a linear combination")
      ->delimiter(',');

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Point estimates for one data set");
  estimate->add_option("--data", est.data, "CSV data file")->required();
  estimate->add_option("--estimators", est.estimators, "Comma-separated subset of PT,JS,EB,HB,HEB")
      ->delimiter(',');
  estimate->add_option("--alpha", est.alpha, "PT significance level");
  estimate->add_option("--a0", est.a0, "EB/HEB constant a0");
  estimate->add_option("--b0", est.b0, "HEB constant b0");
  estimate->add_option("--hb-a", est.hb_a, "HB constant a");
  estimate->add_option("--hb-c", est.hb_c, "HB constant c");
  estimate->add_option("--hb-L", est.hb_L, "HB constant L");
  estimate->add_option("--format", est.format, "text or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }
  if (simulate->parsed()) return cmd_simulate(sim, out, err);
  if (check->parsed()) return cmd_check(chk, out, err);
  return cmd_estimate(est, out, err);
}

}  // namespace kshrink::cli
