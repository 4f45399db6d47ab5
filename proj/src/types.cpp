#include "fbev/types.hpp"

#include <cmath>

namespace fbev {

void GridSpec::validate() const {
    if (cell <= 0.0) throw ConfigError("GridSpec: cell size must be positive");
    auto near_integer = [&](double span) {
        double q = span / cell;
        return std::abs(q - std::lround(q)) < 1e-9 && std::lround(q) >= 1;
    };
    if (x_max <= x_min || y_max <= y_min) throw ConfigError("GridSpec: empty extent");
    if (!near_integer(x_max - x_min) || !near_integer(y_max - y_min))
        throw ConfigError("GridSpec: extent must be an integer number of cells");
    if (x_min > 0.0 || x_max < 0.0 || y_min > 0.0 || y_max < 0.0)
        throw ConfigError("GridSpec: ego origin must lie inside the extent");
}

}  // namespace fbev
