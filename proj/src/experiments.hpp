#pragma once

#include "lp/harness.hpp"

#include <string>
#include <vector>

namespace lp::detail {

struct ExperimentOutput {
  Json result = Json::object();
  std::vector<Assertion> assertions;
  Table table;
};

struct ExperimentDef {
  std::string name;
  Json (*defaults)();
  ExperimentOutput (*run)(const Json& cfg);
};

const std::vector<ExperimentDef>& registry();

}  // namespace lp::detail
