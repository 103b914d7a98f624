#include "vfbl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace vfbl {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int to_int32(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < -2147483647LL || x > 2147483647LL) throw ConfigError(key + ": out of range");
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError(key + ": expected an unsigned integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::string fmt(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string fmt(bool b) { return b ? "true" : "false"; }

template <typename Enum>
struct Names {
  std::vector<std::pair<std::string, Enum>> table;

  Enum parse(const std::string& key, const std::string& v) const {
    for (const auto& [name, value] : table)
      if (name == v) return value;
    std::string options;
    for (const auto& entry : table) options += (options.empty() ? "" : "|") + entry.first;
    throw ConfigError(key + ": expected one of " + options + ", got '" + v + "'");
  }
  std::string name(Enum e) const {
    for (const auto& [name, value] : table)
      if (value == e) return name;
    return "?";
  }
};

const Names<KernelKind> kKernelKinds{
    {{"riemann_liouville", KernelKind::RiemannLiouville}, {"constant", KernelKind::Constant}, {"zero", KernelKind::Zero}}};
const Names<PayoffKind> kPayoffKinds{{{"call", PayoffKind::Call},
                                      {"put", PayoffKind::Put},
                                      {"digital", PayoffKind::Digital},
                                      {"identity", PayoffKind::Identity}}};
const Names<DriverKind> kDriverKinds{{{"zero", DriverKind::Zero}, {"linear_discount", DriverKind::LinearDiscount}}};
const Names<BumpScheme> kSchemes{{{"central", BumpScheme::Central}, {"forward", BumpScheme::Forward}}};
const Names<ZEstimator> kZEstimators{
    {{"increment", ZEstimator::IncrementProjection}, {"joint", ZEstimator::JointRegression}}};
const Names<DxuSource> kDxuSources{{{"regression", DxuSource::Regression}, {"nested", DxuSource::Nested}}};
const Names<DirectionKind> kDirections{
    {{"discrete_kernel", DirectionKind::DiscreteKernel}, {"shifted_kernel", DirectionKind::ShiftedKernel}}};
const Names<Estimator> kEstimators{{{"pathwise", Estimator::Pathwise}, {"mixing", Estimator::Mixing}}};

std::vector<std::pair<double, double>> parse_table(const std::string& key, const std::string& v) {
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError(key + ": expected 'time:value' pairs");
    out.emplace_back(to_double(key, trim(item.substr(0, colon))), to_double(key, trim(item.substr(colon + 1))));
  }
  return out;
}

std::string format_table(const std::vector<std::pair<double, double>>& t) {
  std::string out;
  for (const auto& [time, value] : t) out += (out.empty() ? "" : ", ") + fmt(time) + ":" + fmt(value);
  return out;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const ExperimentConfig&)> get;  // empty for aliases
};

// Grid changes are staged through these so that horizon and steps can be given in any order.
struct GridSpec {
  double horizon;
  int steps;
};

GridSpec grid_spec(const ExperimentConfig& c) { return {c.identity.grid.horizon(), c.identity.grid.n_steps()}; }

void set_grid(ExperimentConfig& c, GridSpec g) {
  if (g.steps < 1) throw ConfigError("grid.steps must be at least 1");
  if (!(g.horizon > 0.0)) throw ConfigError("grid.horizon must be positive");
  c.identity.grid = TimeGrid::uniform(g.horizon, g.steps);
}

#define VFBL_DOUBLE(KEY, EXPR)                                                                        \
  Field {                                                                                             \
    KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) { EXPR = to_double(k, v); }, \
        [](const ExperimentConfig& c) { return fmt(EXPR); }                                           \
  }
#define VFBL_INT(KEY, EXPR)                                                                          \
  Field {                                                                                            \
    KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) { EXPR = to_int32(k, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(EXPR); }                               \
  }
#define VFBL_BOOL(KEY, EXPR)                                                                        \
  Field {                                                                                           \
    KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) { EXPR = to_bool(k, v); }, \
        [](const ExperimentConfig& c) { return fmt(EXPR); }                                         \
  }
#define VFBL_ENUM(KEY, EXPR, NAMES)                                                                     \
  Field {                                                                                               \
    KEY, [](ExperimentConfig& c, const std::string& k, const std::string& v) { EXPR = NAMES.parse(k, v); }, \
        [](const ExperimentConfig& c) { return NAMES.name(EXPR); }                                      \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      VFBL_DOUBLE("model.rho", c.identity.model.rho),
      VFBL_DOUBLE("model.x0", c.identity.model.x0),
      Field{"model.spot",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              const double s = to_double(k, v);
              if (!(s > 0.0)) throw ConfigError(k + ": spot must be positive");
              c.identity.model.x0 = std::log(s);
            },
            {}},
      VFBL_DOUBLE("model.v0", c.identity.model.v0),
      Field{"model.omega_table",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.identity.model.omega_table = parse_table(k, v);
            },
            [](const ExperimentConfig& c) { return format_table(c.identity.model.omega_table); }},
      VFBL_ENUM("kernel.kind", c.identity.model.kernel.kind, kKernelKinds),
      VFBL_DOUBLE("kernel.hurst", c.identity.model.kernel.hurst),
      VFBL_DOUBLE("kernel.scale", c.identity.model.kernel.scale),
      Field{"grid.horizon",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              GridSpec g = grid_spec(c);
              g.horizon = to_double(k, v);
              set_grid(c, g);
            },
            [](const ExperimentConfig& c) { return fmt(c.identity.grid.horizon()); }},
      Field{"grid.steps",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              GridSpec g = grid_spec(c);
              g.steps = to_int32(k, v);
              set_grid(c, g);
            },
            [](const ExperimentConfig& c) { return std::to_string(c.identity.grid.n_steps()); }},
      VFBL_ENUM("payoff.kind", c.identity.payoff.kind, kPayoffKinds),
      VFBL_DOUBLE("payoff.strike", c.identity.payoff.strike),
      VFBL_DOUBLE("payoff.notional", c.identity.payoff.notional),
      VFBL_ENUM("driver.kind", c.driver.kind, kDriverKinds),
      Field{"driver.rate",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) {
              c.driver.rate = to_double(k, v);
              c.driver.lipschitz = std::abs(c.driver.rate);
            },
            [](const ExperimentConfig& c) { return fmt(c.driver.rate); }},
      VFBL_DOUBLE("bump.eps_x", c.identity.bump.eps_x),
      VFBL_DOUBLE("bump.eps_omega", c.identity.bump.eps_omega),
      VFBL_ENUM("bump.scheme", c.identity.bump.scheme, kSchemes),
      VFBL_BOOL("bump.richardson", c.identity.bump.richardson),
      VFBL_INT("basis.degree", c.identity.basis.degree),
      VFBL_BOOL("basis.x", c.identity.basis.use_x),
      VFBL_BOOL("basis.v", c.identity.basis.use_v),
      VFBL_BOOL("basis.int_v", c.identity.basis.use_int_v),
      VFBL_BOOL("basis.forward_variance", c.identity.basis.use_forward_variance),
      VFBL_BOOL("basis.intrinsic", c.identity.basis.intrinsic),
      VFBL_BOOL("basis.bs_proxy", c.identity.basis.bs_proxy),
      VFBL_ENUM("bsde.z_estimator", c.identity.bsde.z_estimator, kZEstimators),
      VFBL_INT("bsde.picard", c.identity.bsde.picard_iterations),
      VFBL_DOUBLE("bsde.max_condition", c.identity.bsde.max_condition),
      VFBL_INT("paths.outer", c.outer_paths),
      VFBL_INT("paths.inner", c.identity.inner_paths),
      VFBL_INT("paths.states", c.identity.n_states),
      VFBL_INT("paths.batches", c.identity.lhs_batches),
      VFBL_INT("identity.t_index", c.identity.t_index),
      VFBL_ENUM("identity.dxu_source", c.identity.dxu_source, kDxuSources),
      VFBL_ENUM("identity.direction", c.identity.direction, kDirections),
      VFBL_ENUM("identity.rhs_estimator", c.identity.rhs_estimator, kEstimators),
      VFBL_DOUBLE("identity.z_max", c.identity.thresholds.z_max),
      VFBL_DOUBLE("identity.min_fraction", c.identity.thresholds.min_fraction),
      VFBL_DOUBLE("identity.slope_lo", c.identity.thresholds.slope_lo),
      VFBL_DOUBLE("identity.slope_hi", c.identity.thresholds.slope_hi),
      VFBL_DOUBLE("identity.min_r2", c.identity.thresholds.min_r2),
      VFBL_DOUBLE("identity.degenerate_variance", c.identity.thresholds.degenerate_variance),
      VFBL_DOUBLE("identity.flag_sigma", c.identity.thresholds.flag_sigma),
      Field{"run.seed",
            [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.identity.seed = to_u64(k, v); },
            [](const ExperimentConfig& c) { return std::to_string(c.identity.seed); }},
      Field{"run.out",
            [](ExperimentConfig& c, const std::string&, const std::string& v) { c.out_dir = v; },
            [](const ExperimentConfig& c) { return c.out_dir; }},
      VFBL_INT("run.threads", c.threads),
      VFBL_ENUM("run.estimator", c.estimator, kEstimators),
  };
  return table;
}

#undef VFBL_DOUBLE
#undef VFBL_INT
#undef VFBL_BOOL
#undef VFBL_ENUM

const Field& field(const std::string& key) {
  for (const auto& f : fields())
    if (f.key == key) return f;
  throw ConfigError("unknown key '" + key + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    identity.model.validate();
    identity.payoff.validate();
    identity.bump.validate();
    driver.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  const int n = identity.grid.n_steps();
  if (identity.t_index < 0 || identity.t_index >= n) throw ConfigError("identity.t_index must lie in [0, grid.steps)");
  if (outer_paths < 1) throw ConfigError("paths.outer must be positive");
  if (identity.inner_paths < 2) throw ConfigError("paths.inner must be at least 2");
  if (identity.n_states < 1) throw ConfigError("paths.states must be positive");
  if (identity.lhs_batches < 2 || identity.lhs_batches > identity.inner_paths)
    throw ConfigError("paths.batches must lie in [2, paths.inner]");
  if (identity.basis.degree < 0 || identity.basis.degree > 4) throw ConfigError("basis.degree must lie in [0, 4]");
  if (identity.bsde.picard_iterations < 0) throw ConfigError("bsde.picard must be non-negative");
  if (!(identity.bsde.max_condition > 1.0)) throw ConfigError("bsde.max_condition must exceed 1");
  const auto& th = identity.thresholds;
  if (!(th.z_max > 0.0)) throw ConfigError("identity.z_max must be positive");
  if (!(th.min_fraction >= 0.0 && th.min_fraction <= 1.0)) throw ConfigError("identity.min_fraction must lie in [0, 1]");
  if (!(th.slope_lo <= th.slope_hi)) throw ConfigError("identity.slope_lo must not exceed identity.slope_hi");
  if (!(th.min_r2 >= 0.0 && th.min_r2 <= 1.0)) throw ConfigError("identity.min_r2 must lie in [0, 1]");
  if (!(th.flag_sigma > 0.0)) throw ConfigError("identity.flag_sigma must be positive");
  if (threads < 0) throw ConfigError("run.threads must be non-negative");
  if (out_dir.empty()) throw ConfigError("run.out must not be empty");
}

ConfigEntries parse_config_text(std::istream& in, const std::string& source) {
  ConfigEntries out;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + "empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (section.empty()) throw ConfigError(where + "key '" + key + "' outside a section");
    const std::string full = section + "." + key;
    if (!out.emplace(full, value).second) throw ConfigError(where + "duplicate key '" + full + "'");
  }
  return out;
}

ConfigEntries read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config_text(in, path);
}

void apply_entries(ExperimentConfig& cfg, const ConfigEntries& entries) {
  if (entries.count("model.x0") && entries.count("model.spot"))
    throw ConfigError("model.x0 and model.spot are mutually exclusive");
  // Grid keys first so that a later grid change cannot invalidate an index set earlier.
  for (const char* key : {"grid.horizon", "grid.steps"})
    if (auto it = entries.find(key); it != entries.end()) field(key).set(cfg, key, it->second);
  for (const auto& [key, value] : entries) {
    if (key == "grid.horizon" || key == "grid.steps") continue;
    field(key).set(cfg, key, value);
  }
  // The identity time defaults to the grid midpoint.
  if (entries.count("grid.steps") && !entries.count("identity.t_index"))
    cfg.identity.t_index = cfg.identity.grid.n_steps() / 2;
}

std::pair<std::string, std::string> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + text + "' is not of the form section.key=value");
  std::string key = trim(text.substr(0, eq));
  if (key.find('.') == std::string::npos) throw ConfigError("override key '" + key + "' needs a section");
  return {key, trim(text.substr(eq + 1))};
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(f.key);
  return out;
}

ConfigEntries resolved_entries(const ExperimentConfig& cfg) {
  ConfigEntries out;
  for (const auto& f : fields())
    if (f.get) out.emplace(f.key, f.get(cfg));
  return out;
}

}  // namespace vfbl
