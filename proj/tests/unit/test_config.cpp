#include <doctest.h>

#include <cmath>
#include <sstream>

#include "vfbl/config.hpp"

using namespace vfbl;

namespace {

ConfigEntries parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config_text(in);
}

}  // namespace

TEST_CASE("defaults are the rough configuration") {
  const ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.model().kernel.hurst == 0.3);
  CHECK(c.identity.t_index == 16);
  CHECK(c.driver.kind == DriverKind::Zero);
}

TEST_CASE("parsing sections, comments and values") {
  const ConfigEntries e = parse(R"(
# comment
[model]
rho = -0.5   ; trailing comment
spot = 120

[kernel]
kind = riemann_liouville
hurst = 0.1
[grid]
steps = 8
[payoff]
kind = put
[bsde]
z_estimator = increment
)");
  CHECK(e.at("model.rho") == "-0.5");
  ExperimentConfig c;
  apply_entries(c, e);
  CHECK(c.model().rho == -0.5);
  CHECK(c.model().x0 == doctest::Approx(std::log(120.0)));
  CHECK(c.model().kernel.hurst == 0.1);
  CHECK(c.identity.grid.n_steps() == 8);
  CHECK(c.identity.t_index == 4);
  CHECK(c.identity.payoff.kind == PayoffKind::Put);
  CHECK(c.identity.bsde.z_estimator == ZEstimator::IncrementProjection);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("malformed input is rejected") {
  CHECK_THROWS_AS(parse("rho = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model\nrho = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\nrho\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\nrho = 1\nrho = 2\n"), ConfigError);
  ExperimentConfig c;
  CHECK_THROWS_AS(apply_entries(c, parse("[model]\nvolvol = 1\n")), ConfigError);
  CHECK_THROWS_AS(apply_entries(c, parse("[model]\nrho = abc\n")), ConfigError);
  CHECK_THROWS_AS(apply_entries(c, parse("[kernel]\nkind = exponential\n")), ConfigError);
  CHECK_THROWS_AS(apply_entries(c, parse("[grid]\nsteps = 0\n")), ConfigError);
  CHECK_THROWS_AS(apply_entries(c, parse("[model]\nx0 = 1\nspot = 2\n")), ConfigError);
  CHECK_THROWS_AS(apply_entries(c, parse("[basis]\nx = maybe\n")), ConfigError);
  CHECK_THROWS_AS(read_config_file("/nonexistent/vfbl.ini"), ConfigError);
}

TEST_CASE("validation maps invariant violations to ConfigError") {
  ExperimentConfig c;
  c.model().rho = 2.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  apply_entries(c, parse("[kernel]\nhurst = 1.5\n"));
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  apply_entries(c, parse("[identity]\nt_index = 40\n"));
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.outer_paths = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("overrides") {
  const auto [k, v] = parse_override("kernel.hurst = 0.2");
  CHECK(k == "kernel.hurst");
  CHECK(v == "0.2");
  CHECK_THROWS_AS(parse_override("hurst=0.2"), ConfigError);
  CHECK_THROWS_AS(parse_override("kernel.hurst"), ConfigError);
}

TEST_CASE("resolved entries round-trip") {
  ExperimentConfig c;
  apply_entries(c, parse("[model]\nrho = -0.3\nomega_table = 0:0.02, 1:0.05\n[run]\nseed = 99\n"));
  const ConfigEntries resolved = resolved_entries(c);
  CHECK(resolved.at("run.seed") == "99");
  CHECK(resolved.count("model.spot") == 0);
  ExperimentConfig d;
  apply_entries(d, resolved);
  CHECK(resolved_entries(d) == resolved);
  CHECK(d.model().omega_table.size() == 2);
  CHECK(d.model().x0 == c.model().x0);
  for (const auto& key : known_keys()) CHECK(key.find('.') != std::string::npos);
}

TEST_CASE("shipped default config matches the built-in defaults") {
  ExperimentConfig from_file;
  apply_entries(from_file, read_config_file(std::string(VFBL_SOURCE_DIR) + "/configs/default.ini"));
  CHECK(resolved_entries(from_file) == resolved_entries(ExperimentConfig{}));
}
