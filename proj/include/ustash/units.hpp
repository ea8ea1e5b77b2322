#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ustash {

// Internal unit system: MB (10^6 bytes), MB/s, seconds, cents.
namespace units {

inline constexpr double kMbpsToMBps = 0.125;
inline constexpr double kKbpsToMBps = 0.125e-3;
inline constexpr double kBpsToMBps = 0.125e-6;

class UnitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

// Splits "500kbps" into (500, "kbps").
inline std::pair<double, std::string> split_quantity(std::string_view text) {
  const std::string s = lower(text);
  if (s.empty()) throw UnitError("empty quantity");
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{}) throw UnitError("not a number: '" + std::string(text) + "'");
  return {value, std::string(ptr, s.data() + s.size())};
}

}  // namespace detail

// Bandwidth to MB/s. A bare number is taken as MB/s.
inline double parse_bandwidth(std::string_view text) {
  auto [v, unit] = detail::split_quantity(text);
  if (unit.empty() || unit == "mb/s" || unit == "mbyte/s") return v;
  if (unit == "bps") return v * kBpsToMBps;
  if (unit == "kbps" || unit == "kbit/s") return v * kKbpsToMBps;
  if (unit == "mbps" || unit == "mbit/s") return v * kMbpsToMBps;
  if (unit == "gbps" || unit == "gbit/s") return v * kMbpsToMBps * 1e3;
  if (unit == "kb/s") return v * 1e-3;
  throw UnitError("unknown bandwidth unit '" + unit + "'");
}

// Data size to MB. A bare number is taken as MB.
inline double parse_size(std::string_view text) {
  auto [v, unit] = detail::split_quantity(text);
  if (unit.empty() || unit == "mb") return v;
  if (unit == "b") return v * 1e-6;
  if (unit == "kb") return v * 1e-3;
  if (unit == "gb") return v * 1e3;
  throw UnitError("unknown size unit '" + unit + "'");
}

// Cost per MB to cents/MB. Accepts "3", "3c/MB", "0.03$/MB".
inline double parse_cost(std::string_view text) {
  if (!text.empty() && text.front() == '$') {
    auto [v, unit] = detail::split_quantity(text.substr(1));
    if (unit.empty() || unit == "/mb") return v * 100.0;
    throw UnitError("unknown cost unit '" + std::string(text) + "'");
  }
  auto [v, unit] = detail::split_quantity(text);
  if (unit.empty() || unit == "c/mb" || unit == "cents/mb" || unit == "c") return v;
  if (unit == "$/mb" || unit == "usd/mb") return v * 100.0;
  throw UnitError("unknown cost unit '" + unit + "'");
}

}  // namespace units
}  // namespace ustash
