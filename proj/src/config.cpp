#include "cewma/config.hpp"

#include <fstream>
#include <set>

namespace cewma {

namespace {

using nlohmann::json;

[[noreturn]] void key_error(const std::string& origin, const std::string& key,
                            const std::string& what) {
  throw ValidationError(origin + ": key \"" + key + "\": " + what);
}

double get_number(const json& j, const std::string& origin,
                  const std::string& key) {
  if (!j.at(key).is_number()) key_error(origin, key, "must be a number");
  return j.at(key).get<double>();
}

double get_number_or(const json& j, const std::string& origin,
                     const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  return get_number(j, origin, key);
}

}  // namespace

nlohmann::json misclass_to_json(const MisclassMatrix& pi) {
  return json{{"pi11", pi.pi11},
              {"pi10", pi.pi10},
              {"pi01", pi.pi01},
              {"pi00", pi.pi00}};
}

MisclassMatrix misclass_from_json(const nlohmann::json& j,
                                  const std::string& origin) {
  if (j.is_string()) {
    if (j.get<std::string>() == "identity") return identity_misclass();
    key_error(origin, "pi", "string form must be \"identity\"");
  }
  if (!j.is_object()) {
    key_error(origin, "pi", "must be an object or \"identity\"");
  }
  const bool full = j.contains("pi11") && j.contains("pi10") &&
                    j.contains("pi01") && j.contains("pi00");
  const bool diagonal = j.contains("pi11") && j.contains("pi00") &&
                        j.size() == 2;
  const bool ratios = j.contains("rr1") && j.contains("rr0") && j.size() == 2;
  MisclassMatrix pi;
  if (full && j.size() == 4) {
    pi.pi11 = get_number(j, origin, "pi11");
    pi.pi10 = get_number(j, origin, "pi10");
    pi.pi01 = get_number(j, origin, "pi01");
    pi.pi00 = get_number(j, origin, "pi00");
  } else if (diagonal) {
    pi = misclass_from_diagonal(get_number(j, origin, "pi11"),
                                get_number(j, origin, "pi00"));
  } else if (ratios) {
    pi = pi_from_rr(get_number(j, origin, "rr1"),
                    get_number(j, origin, "rr0"));
  } else {
    key_error(origin, "pi",
              "expected {pi11,pi10,pi01,pi00}, {pi11,pi00}, {rr1,rr0}, or "
              "\"identity\"");
  }
  try {
    pi.validate();
  } catch (const ValidationError& e) {
    key_error(origin, "pi", e.what());
  }
  return pi;
}

AppConfig parse_config(const nlohmann::json& j, const std::string& origin) {
  if (!j.is_object()) throw ValidationError(origin + ": config must be a JSON object");

  static const std::set<std::string> known = {
      "p0",   "p0_star",  "lambda",        "n",
      "pi",   "arl0_target", "l_bounds",   "m",
      "seed", "max_run_length", "variants", "use_ic_average"};
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) {
      key_error(origin, item.key(), "unknown key");
    }
  }

  AppConfig cfg;
  if (!j.contains("pi")) key_error(origin, "pi", "required");
  cfg.pi = misclass_from_json(j.at("pi"), origin);

  const bool has_p0 = j.contains("p0");
  const bool has_p0_star = j.contains("p0_star");
  if (has_p0 == has_p0_star) {
    key_error(origin, "p0", "exactly one of p0 or p0_star must be given");
  }
  if (has_p0) {
    cfg.chart.p0 = get_number(j, origin, "p0");
  } else {
    cfg.p0_star_given = true;
    const double p0_star = get_number(j, origin, "p0_star");
    if (!(p0_star >= 0.0 && p0_star <= 1.0)) {
      key_error(origin, "p0_star", "must lie in [0, 1]");
    }
    cfg.chart.p0 = correct_proportion(p0_star, cfg.pi).value;
    if (!(cfg.chart.p0 > 0.0 && cfg.chart.p0 < 1.0)) {
      key_error(origin, "p0_star",
                "corrected rate " + std::to_string(cfg.chart.p0) +
                    " falls outside (0, 1); check pi");
    }
  }

  if (!j.contains("lambda")) key_error(origin, "lambda", "required");
  cfg.chart.lambda = get_number(j, origin, "lambda");
  if (!j.contains("n")) key_error(origin, "n", "required");
  if (!j.at("n").is_number_integer()) key_error(origin, "n", "must be an integer");
  cfg.chart.n = j.at("n").get<int>();

  cfg.chart.arl0_target = get_number_or(j, origin, "arl0_target", 370.0);
  if (j.contains("l_bounds")) {
    const json& b = j.at("l_bounds");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() ||
        !b[1].is_number()) {
      key_error(origin, "l_bounds", "must be a two-number array [lo, hi]");
    }
    cfg.chart.l_lo = b[0].get<double>();
    cfg.chart.l_hi = b[1].get<double>();
  }
  if (j.contains("m")) {
    if (!j.at("m").is_number_integer()) key_error(origin, "m", "must be an integer");
    cfg.chart.replicates = j.at("m").get<std::int64_t>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer()) {
      key_error(origin, "seed", "must be an integer");
    }
    cfg.chart.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("max_run_length")) {
    if (!j.at("max_run_length").is_number_integer()) {
      key_error(origin, "max_run_length", "must be an integer");
    }
    cfg.chart.max_run_length = j.at("max_run_length").get<std::int64_t>();
  }
  if (j.contains("variants")) {
    const json& v = j.at("variants");
    if (!v.is_array() || v.empty()) {
      key_error(origin, "variants", "must be a nonempty array");
    }
    cfg.variants.clear();
    for (const json& item : v) {
      if (!item.is_string()) key_error(origin, "variants", "entries must be strings");
      try {
        cfg.variants.push_back(variant_from_string(item.get<std::string>()));
      } catch (const ValidationError& e) {
        key_error(origin, "variants", e.what());
      }
    }
  }
  if (j.contains("use_ic_average")) {
    if (!j.at("use_ic_average").is_boolean()) {
      key_error(origin, "use_ic_average", "must be a boolean");
    }
    cfg.use_ic_average = j.at("use_ic_average").get<bool>();
  }

  try {
    cfg.chart.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return cfg;
}

AppConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return parse_config(j, path);
}

nlohmann::json resolved_config_json(const AppConfig& cfg) {
  json variants = json::array();
  for (ChartVariant v : cfg.variants) variants.push_back(to_string(v));
  return json{{"p0", cfg.chart.p0},
              {"p0_star", mix_proportion(cfg.chart.p0, cfg.pi)},
              {"p0_star_given", cfg.p0_star_given},
              {"lambda", cfg.chart.lambda},
              {"n", cfg.chart.n},
              {"pi", misclass_to_json(cfg.pi)},
              {"arl0_target", cfg.chart.arl0_target},
              {"l_bounds", json::array({cfg.chart.l_lo, cfg.chart.l_hi})},
              {"m", cfg.chart.replicates},
              {"seed", cfg.chart.seed},
              {"max_run_length", cfg.chart.resolved_max_run_length()},
              {"variants", variants},
              {"use_ic_average", cfg.use_ic_average}};
}

nlohmann::json limits_to_json(const ChartLimits& limits,
                              const ChartConfig& cfg,
                              const MisclassMatrix& pi) {
  const double p0_star = mix_proportion(cfg.p0, pi);
  return json{{"variant", to_string(limits.variant)},
              {"L", limits.l_coefficient},
              {"ucl_asymptotic", limits.ucl_asymptotic},
              {"lcl", limits.lcl},
              {"lambda", cfg.lambda},
              {"n", cfg.n},
              {"p0", cfg.p0},
              {"p0_star", p0_star},
              {"p0_star_star", correct_proportion(p0_star, pi).value},
              {"pi", misclass_to_json(pi)}};
}

LoadedLimits limits_from_json(const nlohmann::json& j,
                              const std::string& origin) {
  if (!j.is_object()) throw ValidationError(origin + ": limits must be a JSON object");
  for (const char* key : {"variant", "L", "ucl_asymptotic", "lcl", "lambda",
                          "n", "p0", "p0_star", "p0_star_star", "pi"}) {
    if (!j.contains(key)) key_error(origin, key, "required");
  }
  LoadedLimits out;
  try {
    out.limits.variant = variant_from_string(j.at("variant").get<std::string>());
  } catch (const ValidationError& e) {
    key_error(origin, "variant", e.what());
  }
  out.limits.l_coefficient = get_number(j, origin, "L");
  out.limits.ucl_asymptotic = get_number(j, origin, "ucl_asymptotic");
  out.limits.lcl = get_number(j, origin, "lcl");
  out.lambda = get_number(j, origin, "lambda");
  if (!j.at("n").is_number_integer()) key_error(origin, "n", "must be an integer");
  out.n = j.at("n").get<int>();
  out.p0 = get_number(j, origin, "p0");
  out.p0_star = get_number(j, origin, "p0_star");
  out.p0_star_star = get_number(j, origin, "p0_star_star");
  out.pi = misclass_from_json(j.at("pi"), origin);
  if (!(out.limits.l_coefficient > 0.0)) {
    key_error(origin, "L", "must be positive");
  }
  return out;
}

}  // namespace cewma
