#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fraccusum/drift.hpp"

namespace fraccusum {

/// Hurst index, guarded to [0.01, 0.99]: closer to the ends the kernel
/// exponents 1/2-H approach +-1/2 and the Gamma arguments lose conditioning,
/// so out-of-range values are rejected instead of silently degraded.
class HurstIndex {
public:
    explicit HurstIndex(double value) : value_(value) {
        if (!(value >= 0.01 && value <= 0.99))
            throw std::domain_error("HurstIndex: H must lie in [0.01, 0.99]");
    }

    double value() const { return value_; }

private:
    double value_;
};

/// Uniform time grid t_j = j*step, j = 0..count.
struct Grid {
    double step = 0.0;
    std::size_t count = 0;

    Grid(double step_, std::size_t count_) : step(step_), count(count_) {
        if (!(step > 0.0)) throw std::invalid_argument("Grid: step must be > 0");
        if (count < 2) throw std::invalid_argument("Grid: count must be >= 2");
    }

    double time(std::size_t j) const { return static_cast<double>(j) * step; }
    double horizon() const { return time(count); }
    std::size_t points() const { return count + 1; }

    bool operator==(const Grid&) const = default;
};

constexpr double kTauInfinity = std::numeric_limits<double>::infinity();

/// Discretized observation path; values[0] == 0 always.
struct SamplePath {
    Grid grid;
    std::vector<double> values;           // count+1 points
    double change_point = kTauInfinity;   // tau in {0, inf} for generated paths
    std::optional<DriftSpec> drift;

    SamplePath(Grid g, std::vector<double> v)
        : grid(g), values(std::move(v)) {
        if (values.size() != grid.points())
            throw std::invalid_argument("SamplePath: values length must be grid.count + 1");
        if (values.front() != 0.0)
            throw std::invalid_argument("SamplePath: values[0] must be 0");
    }
};

} // namespace fraccusum
