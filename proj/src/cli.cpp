#include "vfbl/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "vfbl/config.hpp"
#include "vfbl/ensemble_io.hpp"
#include "vfbl/pathderiv.hpp"
#include "vfbl/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vfbl::cli {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

// Seed streams of the CLI subcommands, disjoint from those used by the identity checks.
enum Stream : std::uint64_t { kSimulate = 11, kPrice = 12, kSolve = 13, kDerivatives = 14 };

struct Options {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<std::string> out_dir;
};

Json config_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  for (const auto& [key, value] : resolved_entries(cfg)) {
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return j;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Results go first; everything that varies between identical runs sits in "metadata".
Json document(const std::string& command, const ExperimentConfig& cfg, Json result, double seconds) {
  Json j;
  j["command"] = command;
  j["config"] = config_json(cfg);
  j["result"] = std::move(result);
  j["metadata"] = {{"version", kVersion}, {"timestamp", utc_timestamp()}, {"threads", thread_count()},
                   {"elapsed_seconds", seconds}};
  return j;
}

fs::path output_dir(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const fs::path& file, const Json& j) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open " + file.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + file.string());
}

void append_json_line(const fs::path& file, const Json& j) {
  std::ofstream out(file, std::ios::app);
  if (!out) throw IoError("cannot open " + file.string());
  out << j.dump() << '\n';
  if (!out) throw IoError("failed writing " + file.string());
}

class Timer {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ExperimentConfig resolve(const Options& o, bool paths_are_inner) {
  ExperimentConfig cfg;
  if (o.config_path) apply_entries(cfg, read_config_file(*o.config_path));
  ConfigEntries overrides;
  for (const auto& text : o.overrides) {
    auto [key, value] = parse_override(text);
    overrides[key] = value;
  }
  apply_entries(cfg, overrides);
  if (o.seed) cfg.identity.seed = *o.seed;
  if (o.paths) (paths_are_inner ? cfg.identity.inner_paths : cfg.outer_paths) = *o.paths;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  cfg.validate();
#ifdef _OPENMP
  omp_set_num_threads(cfg.threads > 0 ? cfg.threads : omp_get_num_procs());
#endif
  return cfg;
}

Json estimate_json(const DerivativeEstimate& d) {
  Json j{{"eps", d.eps_used}, {"value", d.value}, {"std_error", d.std_error}};
  j["richardson_pair"] = d.richardson_pair ? Json::array({d.richardson_pair->first, d.richardson_pair->second})
                                           : Json(nullptr);
  return j;
}

int cmd_simulate(const ExperimentConfig& cfg, const std::string& format, std::ostream& out) {
  const Timer timer;
  const PathEnsemble e = simulate_joint(cfg.model(), cfg.identity.grid, cfg.outer_paths,
                                        derive_seed(cfg.seed(), kSimulate));
  const fs::path dir = output_dir(cfg);
  Json files = Json::array();
  if (format == "csv" || format == "both") {
    write_csv(e, (dir / "ensemble.csv").string());
    files.push_back("ensemble.csv");
  }
  if (format == "binary" || format == "both") {
    write_binary(e, (dir / "ensemble.vfbl").string());
    files.push_back("ensemble.vfbl");
  }
  const int n = e.grid.n_steps();
  Json result{{"n_paths", e.n_paths()},
              {"n_steps", n},
              {"seed", e.seed},
              {"factor_residual", e.factor ? e.factor->residual : 0.0},
              {"truncation_fraction", e.truncation_fraction},
              {"mean_V_T", e.V.col(n).mean()},
              {"mean_spot_T", e.X.col(n).array().exp().mean()},
              {"files", files}};
  write_json(dir / "simulate.json", document("simulate", cfg, result, timer.seconds()));
  out << "simulated " << e.n_paths() << " paths on " << n << " steps; negative-variance share "
      << e.truncation_fraction << "\nwrote " << (dir / "simulate.json").string() << '\n';
  return kOk;
}

int cmd_price(const ExperimentConfig& cfg, std::ostream& out) {
  const Timer timer;
  const ForwardCurve curve = initial_curve(cfg.model(), cfg.identity.grid);
  const std::uint64_t seed = derive_seed(cfg.seed(), kPrice);
  const ValueEstimate v = price(cfg.model(), cfg.identity.grid, 0, curve, cfg.model().x0, cfg.identity.payoff,
                                cfg.outer_paths, seed, cfg.estimator);
  Json result{{"t", 0.0},
              {"x", cfg.model().x0},
              {"payoff", to_string(cfg.identity.payoff.kind)},
              {"strike", cfg.identity.payoff.strike},
              {"mean", v.mean},
              {"std_error", v.std_error},
              {"n_paths", v.n_paths},
              {"seed", seed}};
  const fs::path file = output_dir(cfg) / "price.jsonl";
  append_json_line(file, document("price", cfg, result, timer.seconds()));
  out << std::setprecision(10) << "price " << v.mean << " +/- " << v.std_error << " (" << v.n_paths
      << " paths)\nappended to " << file.string() << '\n';
  return kOk;
}

int cmd_solve_bsde(const ExperimentConfig& cfg, bool fields_csv, std::ostream& out) {
  const Timer timer;
  const PathEnsemble e = simulate_joint(cfg.model(), cfg.identity.grid, cfg.outer_paths,
                                        derive_seed(cfg.seed(), kSolve));
  const BsdeSolution sol = solve_bsde(e, cfg.identity.payoff, cfg.driver, cfg.identity.basis, cfg.identity.bsde);
  const std::vector<StepResidual> residual = martingale_residual(sol, e, cfg.identity.thresholds.flag_sigma);
  const ValueEstimate terminal = summarize(sol.Y.col(sol.n_steps()));
  Json steps = Json::array();
  int flagged = 0;
  for (int k = 0; k < sol.n_steps(); ++k) {
    const auto& r = residual[static_cast<std::size_t>(k)];
    flagged += r.flagged;
    steps.push_back({{"step", k},
                     {"t", e.grid[k]},
                     {"y_mean", sol.Y.col(k).mean()},
                     {"z1_mean", sol.Z1.col(k).mean()},
                     {"z2_mean", sol.Z2.col(k).mean()},
                     {"condition_number", sol.condition_numbers[static_cast<std::size_t>(k)]},
                     {"basis_size", sol.basis_sizes[static_cast<std::size_t>(k)]},
                     {"residual_mean", r.mean},
                     {"residual_std_error", r.std_error},
                     {"flagged", r.flagged}});
  }
  const fs::path dir = output_dir(cfg);
  Json result{{"y0", sol.Y(0, 0)},
              {"terminal_mean", terminal.mean},
              {"terminal_std_error", terminal.std_error},
              {"n_paths", e.n_paths()},
              {"basis", sol.basis_spec},
              {"flagged_steps", flagged},
              {"steps", steps}};
  if (fields_csv) {
    std::ofstream csv(dir / "bsde_fields.csv");
    if (!csv) throw IoError("cannot open " + (dir / "bsde_fields.csv").string());
    csv << "path_id,time,Y,Z1,Z2\n" << std::setprecision(17);
    for (int p = 0; p < e.n_paths(); ++p)
      for (int k = 0; k <= sol.n_steps(); ++k) {
        csv << p << ',' << e.grid[k] << ',' << sol.Y(p, k) << ',';
        if (k < sol.n_steps()) csv << sol.Z1(p, k) << ',' << sol.Z2(p, k) << '\n';
        else csv << ",\n";
      }
    result["fields_csv"] = "bsde_fields.csv";
  }
  write_json(dir / "solve_bsde.json", document("solve-bsde", cfg, result, timer.seconds()));
  out << std::setprecision(10) << "Y0 " << sol.Y(0, 0) << " (terminal mean " << terminal.mean << " +/- "
      << terminal.std_error << "), " << flagged << " flagged steps\nwrote " << (dir / "solve_bsde.json").string()
      << '\n';
  return kOk;
}

int cmd_derivatives(const ExperimentConfig& cfg, std::ostream& out) {
  const Timer timer;
  const auto& grid = cfg.identity.grid;
  const ForwardCurve curve = initial_curve(cfg.model(), grid);
  const std::uint64_t seed = derive_seed(cfg.seed(), kDerivatives);
  const auto& bump = cfg.identity.bump;
  struct Item {
    std::string quantity;
    DerivativeEstimate estimate;
  };
  std::vector<Item> items;
  items.push_back({"dx_u", dx_u(cfg.model(), grid, 0, curve, cfg.model().x0, cfg.identity.payoff, bump,
                                cfg.outer_paths, seed, cfg.estimator)});
  items.push_back({"gateaux_constant",
                   gateaux_omega_u(cfg.model(), grid, 0, curve, cfg.model().x0, cfg.identity.payoff,
                                   sample_direction([](double) { return 1.0; }, grid, 0, true), bump,
                                   cfg.outer_paths, seed, cfg.estimator)});
  if (cfg.model().kernel.kind != KernelKind::Zero)
    items.push_back({"gateaux_kernel",
                     gateaux_omega_u(cfg.model(), grid, 0, curve, cfg.model().x0, cfg.identity.payoff,
                                     discrete_kernel_direction(cfg.model().kernel, grid, 0), bump, cfg.outer_paths,
                                     seed, cfg.estimator)});
  const fs::path file = output_dir(cfg) / "derivatives.jsonl";
  for (const auto& item : items) {
    Json result = estimate_json(item.estimate);
    result["quantity"] = item.quantity;
    result["n_paths"] = cfg.outer_paths;
    result["seed"] = seed;
    append_json_line(file, document("derivatives", cfg, result, timer.seconds()));
    out << std::setprecision(10) << item.quantity << ' ' << item.estimate.value << " +/- "
        << item.estimate.std_error << '\n';
  }
  out << "appended to " << file.string() << '\n';
  return kOk;
}

Json report_json(const IdentityReport& r) {
  Json records = Json::array();
  for (const auto& s : r.records) {
    Json j{{"state", s.state}, {"x", s.x},   {"v", s.v},           {"lhs", s.lhs},
           {"lhs_se", s.lhs_se}, {"rhs", s.rhs}, {"rhs_se", s.rhs_se}, {"z", s.z}};
    j["error"] = s.error ? Json(*s.error) : Json(nullptr);
    records.push_back(std::move(j));
  }
  const auto& a = r.aggregate;
  return {{"which", r.which},
          {"t_index", r.t_index},
          {"n_states", r.n_states},
          {"records", records},
          {"aggregate",
           {{"mean_abs_z", a.mean_abs_z},
            {"fraction_within", a.fraction_within},
            {"slope", a.slope},
            {"intercept", a.intercept},
            {"r2", a.r2},
            {"degenerate", a.degenerate},
            {"passed", a.passed}}}};
}

void print_report(const IdentityReport& r, std::ostream& out) {
  out << std::fixed << std::setprecision(5);
  out << "state        x        v        lhs     lhs_se        rhs     rhs_se        z\n";
  for (const auto& s : r.records) {
    out << std::setw(5) << s.state << std::setw(9) << s.x << std::setw(9) << s.v;
    if (s.error) {
      out << "  error: " << *s.error << '\n';
      continue;
    }
    out << std::setw(11) << s.lhs << std::setw(11) << s.lhs_se << std::setw(11) << s.rhs << std::setw(11)
        << s.rhs_se << std::setprecision(2) << std::setw(9) << s.z << std::setprecision(5) << '\n';
  }
  const auto& a = r.aggregate;
  out << "fraction |z| <= z_max: " << a.fraction_within << "  mean |z|: " << a.mean_abs_z;
  if (a.degenerate) out << "  slope test skipped (degenerate rhs)";
  else out << "  slope: " << a.slope << "  intercept: " << a.intercept << "  R2: " << a.r2;
  out << "\n" << (a.passed ? "PASS" : "FAIL") << '\n';
  out.unsetf(std::ios::floatfield);
}

int cmd_verify(const ExperimentConfig& base, const std::string& which, bool negative_control, std::ostream& out) {
  const Timer timer;
  ExperimentConfig cfg = base;
  const fs::path dir = output_dir(cfg);
  const fs::path file = dir / ("identity_" + which + ".json");
  bool passed = false;
  Json result;
  if (which == "martingale") {
    const MartingaleReport m = verify_martingale(cfg.identity, negative_control ? 2.0 : 1.0);
    Json steps = Json::array();
    out << std::setprecision(4);
    out << "step      mean   std_err  w_moment  b_moment  flagged\n";
    for (const auto& s : m.steps) {
      steps.push_back({{"step", s.step},
                       {"mean", s.mean},
                       {"std_error", s.std_error},
                       {"w_moment", s.w_moment},
                       {"w_std_error", s.w_std_error},
                       {"b_moment", s.b_moment},
                       {"b_std_error", s.b_std_error},
                       {"flagged", s.flagged}});
      out << std::setw(4) << s.step << std::setw(10) << s.mean << std::setw(10) << s.std_error << std::setw(10)
          << s.w_moment << std::setw(10) << s.b_moment << std::setw(9) << (s.flagged ? "yes" : "no") << '\n';
    }
    out << m.flagged << " flagged steps\n" << (m.passed ? "PASS" : "FAIL") << '\n';
    passed = m.passed;
    result = {{"which", which}, {"negative_control", negative_control}, {"flagged", m.flagged},
              {"passed", m.passed}, {"steps", steps}};
  } else {
    if (negative_control) {
      if (which != "psi") throw ConfigError("--negative-control applies to psi and martingale only");
      cfg.identity.corrupt_rho_sign = true;
    }
    const IdentityReport r = which == "psi" ? verify_proposition1(cfg.identity) : verify_z1(cfg.identity);
    print_report(r, out);
    passed = r.aggregate.passed;
    result = report_json(r);
    result["negative_control"] = negative_control;
  }
  write_json(file, document("verify-identity", cfg, result, timer.seconds()));
  out << "wrote " << file.string() << '\n';
  return passed ? kOk : kVerificationFailed;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("-c,--config", o.config_path, "Config file");
  app->add_option("--set", o.overrides, "Override section.key=value (repeatable)");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--paths", o.paths, "Path count (inner paths for verify-identity)")->check(CLI::PositiveNumber);
  app->add_option("--out", o.out_dir, "Output directory");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rough-volatility Volterra FBSDE laboratory", "vfbl"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "Simulate an ensemble and export it");
  std::string format = "both";
  simulate->add_option("--format", format, "csv, binary or both")->check(CLI::IsMember({"csv", "binary", "both"}));
  auto* price = app.add_subcommand("price", "Monte Carlo price at t = 0");
  auto* solve = app.add_subcommand("solve-bsde", "Solve the backward equation by regression");
  bool fields_csv = false;
  solve->add_flag("--fields-csv", fields_csv, "Also write per-path Y, Z1, Z2");
  auto* derivs = app.add_subcommand("derivatives", "Bump-and-revalue derivatives at t = 0");
  auto* verify = app.add_subcommand("verify-identity", "Check an identity over sampled states");
  std::string which;
  verify->add_option("--which", which, "psi, z1 or martingale")
      ->required()
      ->check(CLI::IsMember({"psi", "z1", "martingale"}));
  bool negative_control = false;
  verify->add_flag("--negative-control", negative_control, "Corrupt the lhs (psi) or Z (martingale)");
  for (auto* sub : {simulate, price, solve, derivs, verify}) add_common(sub, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kConfigError;
  }

  try {
    const bool inner = verify->parsed();
    const ExperimentConfig cfg = resolve(o, inner);
    if (simulate->parsed()) return cmd_simulate(cfg, format, out);
    if (price->parsed()) return cmd_price(cfg, out);
    if (solve->parsed()) return cmd_solve_bsde(cfg, fields_csv, out);
    if (derivs->parsed()) return cmd_derivatives(cfg, out);
    return cmd_verify(cfg, which, negative_control, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace vfbl::cli
