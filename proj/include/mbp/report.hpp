#pragma once

// Number formatting shared by every report: 9 significant digits, non-finite
// values spelled out as strings so the JSON stays valid.

#include <string>

#include <json.hpp>

#include "mbp/distributions.hpp"

namespace mbp {

std::string format_number(double x);
nlohmann::json json_number(double x);
nlohmann::json to_json(const ExtendedReal& x);

} // namespace mbp
