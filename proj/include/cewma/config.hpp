#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "cewma/chart.hpp"
#include "cewma/misclass.hpp"

namespace cewma {

// Fully-resolved run configuration. chart.p0 always holds the true rate;
// when the file supplied p0_star instead, the correction is applied on
// load and p0_star_given records which one the user wrote.
struct AppConfig {
  ChartConfig chart;
  MisclassMatrix pi;
  std::vector<ChartVariant> variants = {ChartVariant::Corrected};
  bool use_ic_average = false;
  bool p0_star_given = false;
};

// Parses a JSON config. Exactly one of p0/p0_star must be present; pi
// accepts four entries, two diagonal entries, two relative ratios, or the
// string "identity". Unknown keys are rejected. Error messages name the
// origin (file path) and the offending key.
AppConfig parse_config(const nlohmann::json& j, const std::string& origin);
AppConfig load_config(const std::string& path);

// Every value the engine will use, defaults included, for manifests.
nlohmann::json resolved_config_json(const AppConfig& cfg);

nlohmann::json misclass_to_json(const MisclassMatrix& pi);
MisclassMatrix misclass_from_json(const nlohmann::json& j,
                                  const std::string& origin);

// Calibrated-design interchange format, one object per variant.
nlohmann::json limits_to_json(const ChartLimits& limits,
                              const ChartConfig& cfg,
                              const MisclassMatrix& pi);

struct LoadedLimits {
  ChartLimits limits;
  double lambda = 0.0;
  int n = 0;
  double p0 = 0.0;
  double p0_star = 0.0;
  double p0_star_star = 0.0;
  MisclassMatrix pi;
};

LoadedLimits limits_from_json(const nlohmann::json& j,
                              const std::string& origin);

}  // namespace cewma
