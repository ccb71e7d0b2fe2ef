#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fraccusum {

enum class DriftFamily { polynomial, affine, bounded_power };

/**
 * Post-change drift mu_t.
 *
 *   polynomial:     mu_t = theta * t^alpha           (deterministic in time)
 *   affine:         mu_t = c0 + c1 * xi_t            (fractional OU drift)
 *   bounded_power:  mu_t = c0 + c1 * xi_t + min(|xi_t|, 1)^a, a in [0,1)
 *
 * For the polynomial family, alpha + 1 > H is the energy condition that
 * makes the detector optimal in the K-L sense; violating it is a modelling
 * choice, not an error, so construction only exposes a query for it.
 */
struct DriftSpec {
    DriftFamily family = DriftFamily::polynomial;
    double theta = 0.0;   // polynomial amplitude
    double alpha = 0.0;   // polynomial exponent, > -1
    double c0 = 0.0;
    double c1 = 0.0;
    double power = 0.0;   // bounded_power exponent a

    static DriftSpec polynomial(double theta, double alpha) {
        if (!(alpha > -1.0))
            throw std::invalid_argument("DriftSpec: polynomial exponent must be > -1");
        DriftSpec d;
        d.family = DriftFamily::polynomial;
        d.theta = theta;
        d.alpha = alpha;
        return d;
    }

    static DriftSpec affine(double c0, double c1) {
        DriftSpec d;
        d.family = DriftFamily::affine;
        d.c0 = c0;
        d.c1 = c1;
        return d;
    }

    static DriftSpec bounded_power(double c0, double c1, double a) {
        if (!(a >= 0.0 && a < 1.0))
            throw std::invalid_argument("DriftSpec: bounded_power exponent must lie in [0,1)");
        DriftSpec d;
        d.family = DriftFamily::bounded_power;
        d.c0 = c0;
        d.c1 = c1;
        d.power = a;
        return d;
    }

    bool state_dependent() const { return family != DriftFamily::polynomial; }

    /// b(x) for the state-dependent families.
    double b(double x) const {
        switch (family) {
            case DriftFamily::affine:
                return c0 + c1 * x;
            case DriftFamily::bounded_power:
                return c0 + c1 * x + std::pow(std::min(std::abs(x), 1.0), power);
            case DriftFamily::polynomial:
            default:
                throw std::logic_error("DriftSpec::b: polynomial drift is a function of time");
        }
    }

    /// mu(t) for the deterministic family.
    double mu_time(double t) const {
        if (family != DriftFamily::polynomial)
            throw std::logic_error("DriftSpec::mu_time: drift is state-dependent");
        return theta * std::pow(t, alpha);
    }

    /// int_0^t mu_s ds = theta * t^{alpha+1}/(alpha+1) for the polynomial family.
    double integral_time(double t) const {
        if (family != DriftFamily::polynomial)
            throw std::logic_error("DriftSpec::integral_time: drift is state-dependent");
        return theta * std::pow(t, alpha + 1.0) / (alpha + 1.0);
    }

    /// Energy condition alpha + 1 > H (polynomial family only).
    bool satisfies_energy_condition(double hurst) const {
        if (family != DriftFamily::polynomial) return true;
        return alpha + 1.0 > hurst;
    }

    bool operator==(const DriftSpec&) const = default;
};

} // namespace fraccusum
