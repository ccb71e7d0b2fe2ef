#pragma once

#include <stdexcept>
#include <vector>

#include "fraccusum/errors.hpp"
#include "fraccusum/grid.hpp"

namespace fraccusum {

/// Deterministic, strictly positive volatility sigma(s). Either a constant
/// or a table on the grid nodes (midpoint values are node averages).
/// Holder smoothness of a tabulated sigma (delta > 1-H) is the caller's
/// responsibility; a stochastic sigma is not representable here at all.
class VolatilitySpec {
public:
    static VolatilitySpec constant(double sigma0) {
        if (!(sigma0 > 0.0))
            throw std::invalid_argument("VolatilitySpec: sigma must be > 0");
        VolatilitySpec v;
        v.constant_ = sigma0;
        return v;
    }

    static VolatilitySpec tabulated(std::vector<double> node_values) {
        for (double s : node_values)
            if (!(s > 0.0))
                throw std::invalid_argument("VolatilitySpec: table must be strictly positive");
        if (node_values.size() < 2)
            throw std::invalid_argument("VolatilitySpec: table needs at least 2 nodes");
        VolatilitySpec v;
        v.table_ = std::move(node_values);
        return v;
    }

    bool is_constant() const { return table_.empty(); }
    double constant_value() const { return constant_; }
    const std::vector<double>& table() const { return table_; }

    /// sigma at the midpoint of grid cell j (cells 0..count-1).
    double at_midpoint(const Grid& grid, std::size_t j) const {
        if (is_constant()) return constant_;
        if (table_.size() != grid.points())
            throw GridMismatchError("VolatilitySpec: table length does not match grid");
        return 0.5 * (table_[j] + table_[j + 1]);
    }

    bool operator==(const VolatilitySpec&) const = default;

private:
    double constant_ = 1.0;
    std::vector<double> table_;
};

} // namespace fraccusum
