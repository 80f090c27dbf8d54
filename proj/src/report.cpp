#include "mbp/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace mbp {

std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

nlohmann::json json_number(double x) {
    if (!std::isfinite(x)) return format_number(x);
    if (std::floor(x) == x && std::abs(x) < 9.0e15) return static_cast<long long>(x);
    return std::strtod(format_number(x).c_str(), nullptr);
}

nlohmann::json to_json(const ExtendedReal& x) {
    if (!x.is_known()) return "unknown";
    return json_number(x.as_double());
}

} // namespace mbp
