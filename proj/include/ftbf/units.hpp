#pragma once

#include <cmath>
#include <numbers>

namespace ftbf::units {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double bits_to_nats(double bits) { return bits * std::numbers::ln2; }
inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

}  // namespace ftbf::units
