#include "ftbf/baselines.hpp"

#include "ftbf/errors.hpp"
#include "path_following.hpp"

namespace ftbf {

Solution conventional_dl_solve(const ChannelRealization& channel, const SystemConfig& config,
                               const QosTargets& targets) {
  config.validate();
  const detail::Scenario sc{channel, RateMode::kConventional, config.pmax_watts(),
                            config.solver};
  InitialPoint init = detail::restore_feasibility(sc, targets, detail::matched_filter_start(sc));
  if (!init.feasible) {
    Solution sol;
    sol.status = SolveStatus::kInfeasibleInit;
    sol.beams = init.beams;
    sol.rates_nats = user_rates(channel, sol.beams, sol.tau, RateMode::kConventional);
    sol.sum_throughput_nats = sol.rates_nats[0].sum() + sol.rates_nats[1].sum();
    sol.min_throughput_nats =
        std::min(sol.rates_nats[0].minCoeff(), sol.rates_nats[1].minCoeff());
    sol.init_trace = std::move(init.ratio_trace);
    sol.init_iterations = std::move(init.iterations);
    sol.message = std::move(init.message);
    return sol;
  }
  Solution sol = detail::follow_path(sc, {ObjectiveMode::kSum, targets},
                                     {init.beams, init.alpha});
  sol.init_trace = std::move(init.ratio_trace);
  sol.init_iterations = std::move(init.iterations);
  return sol;
}

Solution conventional_dl_solve(const ChannelRealization& channel, const SystemConfig& config) {
  return conventional_dl_solve(channel, config,
                               uniform_qos(channel.users_per_zone(), config.rbar_nats()));
}

const std::vector<SchemeDescriptor>& scheme_registry() {
  static const std::string kNoma =
      "NOMA beamforming and user clustering are defined by external references and are not "
      "part of this library";
  static const std::vector<SchemeDescriptor> registry{
      {"ft", "fractional-time beamforming, sum throughput", true, ""},
      {"conventional-dl", "all users in one slot, sum throughput", true, ""},
      {"maxmin-ft", "fractional-time beamforming, max-min throughput", true, ""},
      {"noma", "zone-1/zone-2 NOMA clusters with SIC", false, kNoma},
      {"ft-noma-both", "fractional time with NOMA in both zones", false, kNoma},
      {"ft-noma-zone1", "fractional time with NOMA in zone 1", false, kNoma},
      {"ft-noma-zone2", "fractional time with NOMA in zone 2", false, kNoma},
  };
  return registry;
}

const SchemeDescriptor& require_scheme(std::string_view name) {
  for (const auto& s : scheme_registry()) {
    if (s.name != name) continue;
    if (!s.implemented) throw UnsupportedScheme("scheme '" + s.name + "' is unsupported: " + s.reason);
    return s;
  }
  throw UnsupportedScheme("unknown scheme '" + std::string(name) + "'");
}

}  // namespace ftbf
