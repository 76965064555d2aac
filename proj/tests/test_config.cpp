#include <cmath>
#include <functional>
#include <string>

#include "cewma/chart.hpp"
#include "cewma/config.hpp"
#include "cewma/misclass.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cewma;
using nlohmann::json;

namespace {

json base_json() {
  return json{{"p0", 0.05},
              {"lambda", 0.05},
              {"n", 5},
              {"pi", {{"pi11", 0.95}, {"pi00", 0.95}}}};
}

bool rejects(const json& j, const std::string& needle) {
  try {
    parse_config(j, "test");
  } catch (const ValidationError& e) {
    return std::string(e.what()).find(needle) != std::string::npos;
  }
  return false;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("minimal config fills the defaults") {
  const AppConfig cfg = parse_config(base_json(), "test");
  CHECK(cfg.chart.p0 == 0.05);
  CHECK(cfg.chart.lambda == 0.05);
  CHECK(cfg.chart.n == 5);
  CHECK(cfg.chart.arl0_target == 370.0);
  CHECK(cfg.chart.replicates == 10001);
  CHECK(cfg.chart.seed == ChartConfig::kDefaultSeed);
  CHECK(cfg.variants.size() == 1);
  CHECK(cfg.variants.front() == ChartVariant::Corrected);
  CHECK_FALSE(cfg.use_ic_average);
  CHECK_FALSE(cfg.p0_star_given);
  CHECK(cfg.pi.pi10 == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("every pi spelling parses") {
  json j = base_json();
  j["pi"] = {{"pi11", 0.95}, {"pi10", 0.05}, {"pi01", 0.05}, {"pi00", 0.95}};
  CHECK(parse_config(j, "test").pi.pi11 == 0.95);

  j["pi"] = {{"rr1", 19.0}, {"rr0", 19.0}};
  CHECK(parse_config(j, "test").pi.pi11 == doctest::Approx(0.95).epsilon(1e-12));

  j["pi"] = "identity";
  CHECK(parse_config(j, "test").pi.is_identity());

  j["pi"] = {{"pi11", 0.95}};
  CHECK(rejects(j, "pi"));
  j["pi"] = "diagonal";
  CHECK(rejects(j, "identity"));
}

TEST_CASE("p0 and p0_star are mutually exclusive") {
  json j = base_json();
  j["p0_star"] = 0.095;
  CHECK(rejects(j, "exactly one of p0 or p0_star"));
  j.erase("p0");
  j.erase("p0_star");
  CHECK(rejects(j, "exactly one of p0 or p0_star"));
}

TEST_CASE("p0_star is corrected before charting") {
  json j = base_json();
  j.erase("p0");
  j["p0_star"] = 0.111;
  const AppConfig cfg = parse_config(j, "test");
  CHECK(cfg.p0_star_given);
  CHECK(std::fabs(cfg.chart.p0 - 0.06777777777777778) < 1e-12);

  // A rate below the false-positive floor corrects to a negative value.
  j["p0_star"] = 0.01;
  CHECK(rejects(j, "outside (0, 1)"));
}

TEST_CASE("unknown keys are refused by name") {
  json j = base_json();
  j["lamda"] = 0.2;
  CHECK(rejects(j, "\"lamda\": unknown key"));
}

TEST_CASE("optional knobs reach the chart config") {
  json j = base_json();
  j["arl0_target"] = 200.0;
  j["l_bounds"] = {0.5, 4.0};
  j["m"] = 2001;
  j["seed"] = 42;
  j["max_run_length"] = 1234;
  j["variants"] = {"true", "naive", "corrected"};
  j["use_ic_average"] = true;
  const AppConfig cfg = parse_config(j, "test");
  CHECK(cfg.chart.arl0_target == 200.0);
  CHECK(cfg.chart.l_lo == 0.5);
  CHECK(cfg.chart.l_hi == 4.0);
  CHECK(cfg.chart.replicates == 2001);
  CHECK(cfg.chart.seed == 42);
  CHECK(cfg.chart.max_run_length == 1234);
  CHECK(cfg.chart.resolved_max_run_length() == 1234);
  CHECK(cfg.variants.size() == 3);
  CHECK(cfg.variants[0] == ChartVariant::TrueChart);
  CHECK(cfg.use_ic_average);

  j["variants"] = json::array();
  CHECK(rejects(j, "nonempty"));
  j["variants"] = {"bogus"};
  CHECK(rejects(j, "variants"));
  j["variants"] = {"corrected"};
  j["m"] = 10.5;
  CHECK(rejects(j, "\"m\": must be an integer"));
}

TEST_CASE("bad numbers fail chart validation with the file named") {
  json j = base_json();
  j["lambda"] = 0.0;
  CHECK(rejects(j, "test: lambda"));
}

TEST_CASE("resolved config echoes both rate scales") {
  const AppConfig cfg = parse_config(base_json(), "test");
  const json out = resolved_config_json(cfg);
  CHECK(out.at("p0").get<double>() == 0.05);
  CHECK(out.at("p0_star").get<double>() == doctest::Approx(0.095).epsilon(1e-12));
  CHECK(out.at("m").get<std::int64_t>() == 10001);
  CHECK(out.at("pi").at("pi11").get<double>() == 0.95);
  CHECK(out.at("variants").size() == 1);
}

TEST_CASE("limits survive a json round trip") {
  const AppConfig cfg = parse_config(base_json(), "test");
  const ChartLimits limits =
      make_limits(ChartVariant::Corrected, 1.645, cfg.chart, cfg.pi);
  const json j = limits_to_json(limits, cfg.chart, cfg.pi);
  CHECK(j.at("L").get<double>() == 1.645);

  const LoadedLimits loaded = limits_from_json(j, "test");
  CHECK(loaded.limits.variant == ChartVariant::Corrected);
  CHECK(loaded.limits.l_coefficient == 1.645);
  CHECK(loaded.limits.ucl_asymptotic == limits.ucl_asymptotic);
  CHECK(loaded.limits.lcl == 0.0);
  CHECK(loaded.lambda == cfg.chart.lambda);
  CHECK(loaded.n == cfg.chart.n);
  CHECK(loaded.p0 == cfg.chart.p0);
  CHECK(std::fabs(loaded.p0_star - 0.095) < 1e-12);
  CHECK(std::fabs(loaded.p0_star_star - 0.05) < 1e-12);
  CHECK(loaded.pi.pi11 == 0.95);

  json missing = j;
  missing.erase("L");
  CHECK_THROWS_AS(limits_from_json(missing, "test"), ValidationError);
  json bad_l = j;
  bad_l["L"] = -1.0;
  CHECK_THROWS_AS(limits_from_json(bad_l, "test"), ValidationError);
}

}  // TEST_SUITE
