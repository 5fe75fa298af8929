#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "ftbf/baselines.hpp"
#include "ftbf/errors.hpp"
#include "ftbf/experiment.hpp"

namespace ftbf {
namespace {

struct Entry {
  std::string key;
  int line = 0;
  const YAML::Node& value;

  template <typename T>
  T as(const char* expected) const {
    if (!value.IsScalar()) throw ConfigError(std::string("expected ") + expected, key, line);
    try {
      return value.as<T>();
    } catch (const YAML::BadConversion&) {
      throw ConfigError(std::string("expected ") + expected + ", got '" + value.Scalar() + "'",
                        key, line);
    }
  }
};

using Setter = std::function<void(const Entry&, ExperimentConfig&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"num_antennas", [](const Entry& e, ExperimentConfig& c) {
         c.system.num_antennas = e.as<int>("an integer");
       }},
      {"users_per_zone", [](const Entry& e, ExperimentConfig& c) {
         c.system.users_per_zone = e.as<int>("an integer");
       }},
      {"pmax_dbm", [](const Entry& e, ExperimentConfig& c) {
         c.system.pmax_dbm = e.as<double>("a number");
       }},
      {"rbar_bits", [](const Entry& e, ExperimentConfig& c) {
         c.system.rbar_bits = e.as<double>("a number");
       }},
      {"noise_density_dbm_hz", [](const Entry& e, ExperimentConfig& c) {
         c.system.noise_density_dbm_hz = e.as<double>("a number");
       }},
      {"bandwidth_hz", [](const Entry& e, ExperimentConfig& c) {
         c.system.bandwidth_hz = e.as<double>("a number");
       }},
      {"cell_radius_m", [](const Entry& e, ExperimentConfig& c) {
         c.system.cell_radius_m = e.as<double>("a number");
       }},
      {"zone1_radius_m", [](const Entry& e, ExperimentConfig& c) {
         c.system.zone1_radius_m = e.as<double>("a number");
       }},
      {"min_distance_m", [](const Entry& e, ExperimentConfig& c) {
         c.system.min_distance_m = e.as<double>("a number");
       }},
      {"conv_tol", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.conv_tol = e.as<double>("a number");
       }},
      {"max_iters", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.max_iters = e.as<int>("an integer");
       }},
      {"init_max_iters", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.init_max_iters = e.as<int>("an integer");
       }},
      {"init_stall_window", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.init_stall_window = e.as<int>("an integer");
       }},
      {"init_stall_tol", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.init_stall_tol = e.as<double>("a number");
       }},
      {"conic_tol", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.conic_tol = e.as<double>("a number");
       }},
      {"conic_max_iters", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.conic_max_iters = e.as<int>("an integer");
       }},
      {"feas_tol", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.feas_tol = e.as<double>("a number");
       }},
      {"trust_margin", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.trust_margin = e.as<double>("a number");
       }},
      {"alpha_min", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.alpha_min = e.as<double>("a number");
       }},
      {"alpha_max", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.alpha_max = e.as<double>("a number");
       }},
      {"coeff_floor", [](const Entry& e, ExperimentConfig& c) {
         c.system.solver.coeff_floor = e.as<double>("a number");
       }},
      {"schemes", [](const Entry& e, ExperimentConfig& c) {
         c.schemes.clear();
         if (e.value.IsSequence()) {
           for (const auto& item : e.value) {
             if (!item.IsScalar()) throw ConfigError("expected a list of names", e.key, e.line);
             c.schemes.push_back(item.Scalar());
           }
         } else {
           std::stringstream ss(e.as<std::string>("a scheme name or list"));
           for (std::string name; std::getline(ss, name, ',');) {
             const auto first = name.find_first_not_of(' ');
             const auto last = name.find_last_not_of(' ');
             if (first != std::string::npos) c.schemes.push_back(name.substr(first, last - first + 1));
           }
         }
         if (c.schemes.empty()) throw ConfigError("scheme list is empty", e.key, e.line);
         const auto& registry = scheme_registry();
         for (const auto& name : c.schemes) {
           const bool known = std::any_of(registry.begin(), registry.end(),
                                          [&](const SchemeDescriptor& d) { return d.name == name; });
           if (!known) throw ConfigError("unknown scheme '" + name + "'", e.key, e.line);
         }
       }},
      {"sweep_axis", [](const Entry& e, ExperimentConfig& c) {
         const auto v = e.as<std::string>("none, pmax_dbm or rbar_bits");
         if (v == "none") {
           c.sweep_axis = SweepAxis::kNone;
         } else if (v == "pmax_dbm") {
           c.sweep_axis = SweepAxis::kPmaxDbm;
         } else if (v == "rbar_bits") {
           c.sweep_axis = SweepAxis::kRbarBits;
         } else {
           throw ConfigError("expected none, pmax_dbm or rbar_bits, got '" + v + "'", e.key, e.line);
         }
       }},
      {"sweep_values", [](const Entry& e, ExperimentConfig& c) {
         if (!e.value.IsSequence()) throw ConfigError("expected a list of numbers", e.key, e.line);
         c.sweep_values.clear();
         for (const auto& item : e.value) {
           c.sweep_values.push_back(Entry{e.key, item.Mark().line + 1, item}.as<double>("a number"));
         }
         for (std::size_t i = 1; i < c.sweep_values.size(); ++i) {
           if (!(c.sweep_values[i] > c.sweep_values[i - 1])) {
             throw ConfigError("values must be strictly increasing", e.key, e.line);
           }
         }
       }},
      {"mc_runs", [](const Entry& e, ExperimentConfig& c) {
         c.mc_runs = e.as<int>("an integer");
         if (c.mc_runs < 1) throw ConfigError("must be at least 1", e.key, e.line);
       }},
      {"base_seed", [](const Entry& e, ExperimentConfig& c) {
         c.base_seed = e.as<std::uint64_t>("an unsigned integer");
       }},
      {"output", [](const Entry& e, ExperimentConfig& c) {
         c.output = e.as<std::string>("a path");
       }},
      {"summary_output", [](const Entry& e, ExperimentConfig& c) {
         c.summary_output = e.as<std::string>("a path");
       }},
      {"format", [](const Entry& e, ExperimentConfig& c) {
         const auto v = e.as<std::string>("csv or jsonl");
         if (v == "csv") {
           c.format = OutputFormat::kCsv;
         } else if (v == "jsonl") {
           c.format = OutputFormat::kJsonl;
         } else {
           throw ConfigError("expected csv or jsonl, got '" + v + "'", e.key, e.line);
         }
       }},
      {"threads", [](const Entry& e, ExperimentConfig& c) {
         c.threads = e.as<int>("an integer");
         if (c.threads < 1) throw ConfigError("must be at least 1", e.key, e.line);
       }},
      {"record_wall_time", [](const Entry& e, ExperimentConfig& c) {
         c.record_wall_time = e.as<bool>("true or false");
       }},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::istream& in) {
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, {}, e.mark.is_null() ? 0 : e.mark.line + 1);
  }

  ExperimentConfig config;
  if (root.IsNull()) {
    config.validate();
    return config;
  }
  if (!root.IsMap()) throw ConfigError("expected key: value pairs at top level", {}, 1);

  std::set<std::string> seen;
  for (const auto& kv : root) {
    const std::string key = kv.first.Scalar();
    const int line = kv.first.Mark().line + 1;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown key", key, line);
    if (!seen.insert(key).second) throw ConfigError("duplicate key", key, line);
    it->second(Entry{key, line, kv.second}, config);
  }

  try {
    config.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_experiment_config(in);
}

}  // namespace ftbf
