#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ftbf/channel.hpp"
#include "ftbf/rates.hpp"
#include "ftbf/sca.hpp"

namespace ftbf {

/// All 2K users served in the same slot under a total power budget, optimized
/// with the same minorant at t = 1. Reported time split is (1, 1).
Solution conventional_dl_solve(const ChannelRealization& channel, const SystemConfig& config);
Solution conventional_dl_solve(const ChannelRealization& channel, const SystemConfig& config,
                               const QosTargets& targets);

struct SchemeDescriptor {
  std::string name;
  std::string description;
  bool implemented = false;
  std::string reason;  // why an entry is not implemented
};

/// Every comparison scheme this library knows about, implemented or not.
const std::vector<SchemeDescriptor>& scheme_registry();

/// Looks up an implemented scheme. Throws UnsupportedScheme for declared but
/// unimplemented schemes and for unknown names.
const SchemeDescriptor& require_scheme(std::string_view name);

}  // namespace ftbf
