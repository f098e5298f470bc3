#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tailbin/baselines.hpp"
#include "tailbin/cs_model.hpp"
#include "tailbin/error.hpp"
#include "tailbin/evaluation.hpp"
#include "tailbin/experiments.hpp"
#include "tailbin/io.hpp"
#include "tailbin/panel_model.hpp"
#include "tailbin/tail_index.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tailbin;

namespace {

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

void report_excluded(std::size_t n) {
  if (n > 0) std::cerr << "excluded " << n << " row(s) with missing y or x\n";
}

CsMethod parse_method(const std::string& s) {
  if (s == "mle") return CsMethod::kMle;
  if (s == "hill") return CsMethod::kHill;
  if (s == "rank-half" || s == "rank_half") return CsMethod::kRankHalf;
  throw InputError("unknown method '" + s + "'");
}

Correction parse_correction(const std::string& s) {
  if (s == "none") return Correction::kNone;
  if (s == "jackknife") return Correction::kJackknife;
  throw InputError("unknown correction '" + s + "'");
}

std::string vec_str(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + format_number(v[i]);
  return out;
}

std::string se_str(const Matrix& cov) {
  std::string out;
  for (Eigen::Index i = 0; i < cov.rows(); ++i) out += (i ? " " : "") + format_number(std::sqrt(cov(i, i)));
  return out;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string experiment;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
};

int run_simulate(const SimulateArgs& a) {
  const ExperimentKind kind = a.experiment == "exp1" ? ExperimentKind::kExp1 : ExperimentKind::kExp2;
  ExperimentConfig config = config_from_json(read_json(a.config), kind);
  if (a.seed) config.base_seed = *a.seed;
  if (a.reps) {
    config.reps = *a.reps;
    try {
      config.validate();
    } catch (const Error& e) {
      throw InputError(e.what());
    }
  }
  const ExperimentResult result = run_experiment(config);
  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  write_text_atomic(dir / "summary.csv", summary_csv(result));
  if (kind == ExperimentKind::kExp2) {
    write_text_atomic(dir / "lps.csv", lps_csv(result));
    write_text_atomic(dir / "lps_reps.csv", lps_reps_csv(result));
  }
  json manifest;
  manifest["spec_version"] = kSpecVersion;
  manifest["config"] = to_json(config);
  manifest["seed"] = config.base_seed;
  write_json(dir / "manifest.json", manifest);
  return 0;
}

int run_fit_cs(const std::string& data, double q, const std::string& method, const std::string& out) {
  const CsvLoad load = cross_section_from_csv(parse_csv(read_text(data)));
  report_excluded(load.excluded);
  const CsFit fit = fit_cs_tail(load.data, q, parse_method(method));
  write_json(out, to_json(fit));
  for (int y = 0; y < 2; ++y) {
    std::cout << fmt::format("y={} theta={} se={} threshold={} k={}{}", y, vec_str(fit.theta[y]), se_str(fit.cov[y]),
                             format_number(fit.threshold[y]), fit.tail_count[y], y == 0 ? "; " : "\n");
  }
  return 0;
}

int run_fit_panel(const std::string& data, const std::string& mode, double q, const std::string& correction,
                  const std::string& bandwidth, const std::string& out) {
  const PanelLoad load = panel_from_csv(parse_csv(read_text(data)));
  report_excluded(load.excluded);
  const PanelData& panel = load.panel;
  if (mode == "conditional") {
    const PanelFit fit = fit_panel_conditional(panel, q);
    write_json(out, to_json(fit, mode));
    std::cout << "theta_star=" << vec_str(fit.theta_star) << " se=" << se_str(fit.cov)
              << " contributing=" << fit.n_contributing << "\n";
  } else if (mode == "local") {
    std::optional<double> h;
    if (bandwidth != "silverman") {
      try {
        h = std::stod(bandwidth);
      } catch (const std::exception&) {
        throw InputError("bandwidth must be a number or 'silverman'");
      }
    }
    const PanelFit fit = fit_panel_local(panel, q, h);
    write_json(out, to_json(fit, mode));
    std::cout << "theta_star=" << vec_str(fit.theta_star) << " se=" << se_str(fit.cov)
              << " bandwidth=" << format_number(fit.bandwidth) << "\n";
  } else if (mode == "fe") {
    const FeFit fit = fit_panel_fe(panel, q, FeTransform::kLogTail, parse_correction(correction));
    write_json(out, to_json(fit));
    std::cout << "theta_star=" << vec_str(fit.theta_star) << " se=" << se_str(fit.cov)
              << " retained=" << fit.a_tilde.size() << " dropped=" << fit.dropped_units.size() << "\n";
  } else {
    if (panel.max_periods() < 5) throw InputError("dynamic mode requires at least five periods");
    const DynFit fit = fit_panel_dynamic(panel, q);
    write_json(out, to_json(fit));
    std::cout << "theta_01=" << vec_str(fit.theta_01) << " theta_10=" << vec_str(fit.theta_10)
              << " theta_11=" << vec_str(fit.theta_11) << " windows=" << fit.n_windows << "\n";
  }
  return 0;
}

int run_forecast(const std::string& fit_path, const std::string& data, const std::string& out) {
  const json artifact = read_json(fit_path);
  if (!artifact.is_object() || !artifact.contains("model")) throw InputError("fit artifact has no model field");
  const std::string model = artifact.at("model").get<std::string>();
  const CsvTable table = parse_csv(read_text(data));
  std::string text;
  if (model == "cs_tail" || model == "logit") {
    const CsvLoad load = cross_section_from_csv(table);
    report_excluded(load.excluded);
    text = "unit,p_hat,y_realized\n";
    std::optional<CsFit> cs;
    std::optional<LogitFit> lg;
    if (model == "cs_tail") cs = cs_fit_from_json(artifact);
    else lg = logit_fit_from_json(artifact);
    for (std::size_t i = 0; i < load.data.size(); ++i) {
      const Vector z = load.data.z.row(static_cast<Eigen::Index>(i)).transpose();
      if (cs && z.size() != cs->theta[0].size()) throw InputError("data z dimension does not match the fit");
      const double p = cs ? predict_prob_cs(*cs, load.data.x[i], z) : lg->predict(load.data.x[i]);
      text += fmt::format("{},{},{}\n", i + 1, format_number(p), load.data.y[i]);
    }
  } else if (model == "panel_fe") {
    const FeFit fit = fe_fit_from_json(artifact);
    const PanelLoad load = panel_from_csv(table);
    report_excluded(load.excluded);
    text = "unit,p_hat,y_realized\n";
    for (const auto& u : load.panel.units) {
      std::optional<std::size_t> last;
      for (std::size_t t = 0; t < u.periods(); ++t) {
        if (u.observed(t)) last = t;
      }
      if (!last) continue;
      if (!fit.a_tilde.count(u.id)) {
        std::cerr << "unit " << u.id << " is not in the fit; skipped\n";
        continue;
      }
      const UnitForecast f = forecast_unit(fit, u.id, u.x[*last], u.z_at(*last));
      text += fmt::format("{},{},{}\n", u.id, format_number(f.p_hat), u.y[*last]);
    }
  } else {
    throw InputError("forecast supports cs_tail, logit and panel_fe artifacts, not '" + model + "'");
  }
  write_text_atomic(out, text);
  return 0;
}

int run_evaluate(const std::vector<std::string>& files, bool pairwise) {
  std::vector<ForecastSet> sets;
  for (const auto& f : files) sets.push_back(forecasts_from_csv(parse_csv(read_text(f))));
  std::cout << "file,sum_lps,mean_lps,n\n";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const LpsSummary s = log_predictive_score(sets[i]);
    std::cout << fmt::format("{},{},{},{}\n", files[i], format_number(s.sum), format_number(s.mean), s.n);
  }
  if (pairwise) {
    std::cout << "file,reference,mean_diff,t_stat,p_value,n\n";
    for (std::size_t i = 1; i < sets.size(); ++i) {
      const LpsDiffTest t = lps_diff_test(sets[i], sets[0]);
      std::cout << fmt::format("{},{},{},{},{},{}\n", files[i], files[0], format_number(t.mean_diff),
                               format_number(t.t_stat), format_number(t.p_value), t.n);
    }
  }
  return 0;
}

int run_loglog(const std::string& data, bool by_y, const std::string& out) {
  const CsvLoad load = cross_section_from_csv(parse_csv(read_text(data)));
  report_excluded(load.excluded);
  std::string text = "group,log_x,log_survival\n";
  auto emit = [&](const std::string& group, const std::vector<double>& xs) {
    for (const auto& p : loglog_points(xs)) {
      text += fmt::format("{},{},{}\n", group, format_number(p.log_x), format_number(p.log_survival));
    }
  };
  emit("all", load.data.x);
  if (by_y) {
    for (int y = 0; y < 2; ++y) {
      std::vector<double> xs;
      for (std::size_t i = 0; i < load.data.size(); ++i) {
        if (load.data.y[i] == y) xs.push_back(load.data.x[i]);
      }
      emit(std::to_string(y), xs);
    }
  }
  write_text_atomic(out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary-outcome models with heavy-tailed covariates"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo experiment");
  simulate->add_option("--experiment", sim.experiment)->required()->check(CLI::IsMember({"exp1", "exp2"}));
  simulate->add_option("--config", sim.config)->required();
  simulate->add_option("--out", sim.out)->required();
  simulate->add_option("--seed", sim.seed);
  simulate->add_option("--reps", sim.reps);

  std::string data, out, method = "mle", mode, correction = "jackknife", bandwidth = "silverman", fit_path;
  double q = 0.975;
  bool by_y = false, pairwise = false;
  std::vector<std::string> forecasts;

  auto* fit_cs = app.add_subcommand("fit-cs", "Fit the cross-sectional tail model");
  fit_cs->add_option("--data", data)->required();
  fit_cs->add_option("--tail-q", q)->required();
  fit_cs->add_option("--method", method)->check(CLI::IsMember({"mle", "hill", "rank-half"}));
  fit_cs->add_option("--out", out)->required();

  auto* fit_panel = app.add_subcommand("fit-panel", "Fit a panel tail model");
  fit_panel->add_option("--data", data)->required();
  fit_panel->add_option("--mode", mode)->required()->check(CLI::IsMember({"conditional", "fe", "dynamic", "local"}));
  fit_panel->add_option("--tail-q", q)->required();
  fit_panel->add_option("--correction", correction)->check(CLI::IsMember({"none", "jackknife"}));
  fit_panel->add_option("--bandwidth", bandwidth);
  fit_panel->add_option("--out", out)->required();

  auto* forecast = app.add_subcommand("forecast", "Forecast probabilities from a fit artifact");
  forecast->add_option("--fit", fit_path)->required();
  forecast->add_option("--data", data)->required();
  forecast->add_option("--out", out)->required();

  auto* evaluate = app.add_subcommand("evaluate", "Log predictive scores of forecast files");
  evaluate->add_option("--forecasts", forecasts)->required();
  evaluate->add_flag("--pairwise", pairwise);

  auto* loglog = app.add_subcommand("loglog", "Log-log survival plot data");
  loglog->add_option("--data", data)->required();
  loglog->add_flag("--by-y", by_y);
  loglog->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fit_cs) return run_fit_cs(data, q, method, out);
    if (*fit_panel) return run_fit_panel(data, mode, q, correction, bandwidth, out);
    if (*forecast) return run_forecast(fit_path, data, out);
    if (*evaluate) return run_evaluate(forecasts, pairwise);
    if (*loglog) return run_loglog(data, by_y, out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
