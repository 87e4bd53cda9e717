#pragma once

// Zero crossings and optima of the key-rate bounds.
//
// Every search is a plain bracketing method (bisection, golden section), so the
// result for a given input is deterministic to the bit.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cvqkd/bounds.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/protocol.hpp"

namespace cvqkd {

/// Stand-in for infinite modulation. Results are checked against `check_modulation`.
inline constexpr double high_modulation = 15.0;
inline constexpr double check_modulation = 20.0;

inline constexpr double min_transmission = 1e-6;
inline constexpr double max_transmission = 1.0 - 1e-9;
inline constexpr double root_tolerance = 1e-9;
inline constexpr double max_noise_bracket = 64.0;

struct RootBracket {
    double lo = 0.0;
    double hi = 1.0;
    double tol = root_tolerance;
    int max_iter = 200;
};

struct CriticalPoint {
    double value = 0.0;
    std::optional<double> loss_db; // transmission-type points only
    double residual = 0.0;         // |key rate| at value, nats
};

inline double losses_db(double transmission) { return -10.0 * std::log10(transmission); }
inline double transmission_from_db(double db) { return std::pow(10.0, -db / 10.0); }

/// Bisection to |hi - lo| <= tol; returns the midpoint of the final bracket.
template <typename F>
double find_root(F&& objective, RootBracket bracket) {
    if (!(bracket.lo < bracket.hi) || !(bracket.tol > 0.0)) {
        throw std::invalid_argument("find_root: need lo < hi and tol > 0");
    }
    double lo = bracket.lo;
    double hi = bracket.hi;
    const double f_lo = objective(lo);
    const double f_hi = objective(hi);
    if (!std::isfinite(f_lo) || !std::isfinite(f_hi)) {
        throw NumericalFailure("find_root: objective is not finite at the bracket ends");
    }
    if (f_lo * f_hi > 0.0) {
        throw BracketFailure("find_root: objective has the same sign at both bracket ends");
    }
    if (f_lo == 0.0) {
        return lo;
    }
    if (f_hi == 0.0) {
        return hi;
    }
    const bool lo_negative = f_lo < 0.0;
    for (int iter = 0; hi - lo > bracket.tol; ++iter) {
        if (iter >= bracket.max_iter) {
            throw NumericalFailure("find_root: iteration cap reached");
        }
        const double mid = 0.5 * (lo + hi);
        const double f_mid = objective(mid);
        if (!std::isfinite(f_mid)) {
            throw NumericalFailure("find_root: objective is not finite at " + std::to_string(mid));
        }
        if (f_mid == 0.0) {
            return mid;
        }
        if ((f_mid < 0.0) == lo_negative) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace detail {

/// cosh(r_E) - 1 allowed at the top of a transmission search. Beyond this Eve's
/// squeezing dominates the covariance entries and spectra lose precision.
inline constexpr double search_cloner_excess = 1e4;

/// Upper end of a transmission search: 1 - 1e-9, or lower when eps > 0 so that
/// eps T / (1 - T) stays at search_cloner_excess.
inline double transmission_ceiling(double eps) {
    if (eps == 0.0) {
        return max_transmission;
    }
    return std::min(max_transmission, search_cloner_excess / (search_cloner_excess + eps));
}

/// Largest excess noise supported at transmission t.
inline double noise_ceiling(double t) { return 0.999 * max_cloner_excess * (1.0 - t) / t; }

} // namespace detail

/// Transmission at which the selected key rate vanishes, searched on [1e-6, 1 - 1e-9].
inline CriticalPoint critical_transmission(const RateSelection& rate, double eps) {
    validate_bound_selection(rate.bound, rate.direction, rate.protocol.kind());
    auto objective = [&](double t) { return rate(ChannelParams(t, eps)); };
    const double hi = detail::transmission_ceiling(eps);
    if (!(objective(hi) > 0.0)) {
        throw NoPositiveRegion("no-positive-region: key rate is not positive even at T = " + std::to_string(hi));
    }
    if (objective(min_transmission) > 0.0) {
        throw BracketFailure("key rate stays positive down to T = 1e-6; there is no loss limit");
    }
    const double tc = find_root(objective, {min_transmission, hi, root_tolerance, 200});
    return {tc, losses_db(tc), std::abs(objective(tc))};
}

/// Excess noise at which the selected key rate vanishes for a fixed transmission.
/// The upper end of the bracket doubles from 1 up to 64 until the rate turns negative.
inline CriticalPoint critical_noise(const RateSelection& rate, double transmission) {
    validate_bound_selection(rate.bound, rate.direction, rate.protocol.kind());
    if (!(transmission > 0.0 && transmission < 1.0)) {
        throw std::invalid_argument("critical_noise: transmission must lie in (0, 1)");
    }
    auto objective = [&](double eps) { return rate(ChannelParams(transmission, eps)); };
    if (!(objective(0.0) > 0.0)) {
        throw NoPositiveRegion("no-positive-region: key rate is not positive at eps = 0");
    }
    const double ceiling = detail::noise_ceiling(transmission);
    double lo = 0.0;
    for (double eps_max = 1.0; eps_max <= max_noise_bracket; eps_max *= 2.0) {
        const double hi = std::min(eps_max, ceiling);
        if (objective(hi) <= 0.0) {
            const double ec = find_root(objective, {lo, hi, root_tolerance, 200});
            return {ec, std::nullopt, std::abs(objective(ec))};
        }
        if (hi == ceiling) {
            break;
        }
        lo = hi;
    }
    throw BracketFailure("no zero crossing of the key rate below eps = " +
                         std::to_string(std::min(max_noise_bracket, ceiling)));
}

struct ModulationOptimum {
    double modulation = 0.0;
    double loss_db = 0.0;
    bool at_boundary = false; // no interior optimum; `modulation` is an end of the search range
};

inline constexpr double min_search_modulation = 0.01;
inline constexpr double max_search_modulation = 10.0;

/// Tolerable losses (dB) at a given modulation; zero when the rate is nowhere positive.
inline double tolerable_losses_db(const RateSelection& rate, double eps) {
    try {
        return critical_transmission(rate, eps).loss_db.value();
    } catch (const NoPositiveRegion&) {
        return 0.0;
    }
}

/// Golden-section maximisation of the tolerable losses over r_A in [0.01, 10].
/// Ties go to the smaller r_A.
inline ModulationOptimum optimal_modulation(const RateSelection& rate, double eps, double tol = 1e-4) {
    if (rate.bound == BoundKind::collective) {
        throw std::invalid_argument("optimal_modulation: supported for the general bounds only");
    }
    validate_bound_selection(rate.bound, rate.direction, rate.protocol.kind());
    auto objective = [&](double r) {
        RateSelection at = rate;
        at.protocol = rate.protocol.with_modulation(r);
        return tolerable_losses_db(at, eps);
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = min_search_modulation;
    double b = max_search_modulation;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    const double best = 0.5 * (a + b);
    const double f_best = objective(best);

    // A monotone objective drives the search into an end of the range.
    const double f_lo = objective(min_search_modulation);
    const double f_hi = objective(max_search_modulation);
    constexpr double flat = 1e-6; // dB
    if (f_hi >= f_best - flat && f_hi >= f_lo) {
        return {max_search_modulation, f_hi, true};
    }
    if (f_lo >= f_best - flat) {
        return {min_search_modulation, f_lo, true};
    }
    return {best, f_best, false};
}

// Closed-form limits for very high modulation.

/// LHS - RHS of the direct-reconciliation critical-transmission relation
///   Tc (1-Tc) (1 - Tc + TA (2Tc - 1)) / (TA + Tc - 2 TA Tc) = (1-Tc)^2.
inline double critical_transmission_relation(double tc, double ta) {
    const double lhs = tc * (1.0 - tc) * (1.0 - tc + ta * (2.0 * tc - 1.0)) / (ta + tc - 2.0 * ta * tc);
    return lhs - (1.0 - tc) * (1.0 - tc);
}

/// (1/(1+eps)) ((s+1)/(s-1))^s - e^2 with s = sqrt(1+eps); zero at the coherent-state
/// direct-reconciliation noise limit.
inline double direct_noise_limit_relation(double eps) {
    const double s = std::sqrt(1.0 + eps);
    return std::pow((s + 1.0) / (s - 1.0), s) / (1.0 + eps) - std::exp(2.0);
}

struct AnalyticConstants {
    double t_c_general_w = 0.0;
    double t_c_collective_direct = 0.0;
    double eps_c_direct_coherent = 0.0;
    double eps_c_reverse_coherent = 0.0;
    double eps_c_squeezed = 0.0;
};

inline AnalyticConstants analytic_constants() {
    const double e2 = std::exp(2.0);
    return {
        .t_c_general_w = e2 / (e2 + 4.0),
        .t_c_collective_direct = 0.5,
        .eps_c_direct_coherent = find_root(direct_noise_limit_relation, {0.5, 1.5, 1e-12, 200}),
        .eps_c_reverse_coherent = 0.5 * (std::sqrt(1.0 + 16.0 / e2) - 1.0),
        .eps_c_squeezed = 2.0 / std::numbers::e,
    };
}

struct ConstantComparison {
    std::string name;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Each closed-form constant next to the corresponding bisected critical point at
/// r_A = 15 (noise limits at T = 0.999).
inline std::vector<ConstantComparison> compare_constants() {
    const AnalyticConstants k = analytic_constants();
    const auto coherent = ProtocolParams::coherent(high_modulation);
    const auto squeezed = ProtocolParams::squeezed(high_modulation);
    constexpr double near_lossless = 0.999;
    const RateSelection general_w{BoundKind::general_w, std::nullopt, coherent};
    const RateSelection coh_direct{BoundKind::collective, Direction::direct, coherent};
    const RateSelection coh_reverse{BoundKind::collective, Direction::reverse, coherent};
    const RateSelection sq_reverse{BoundKind::collective, Direction::reverse, squeezed};
    return {
        {"t_c_general_w", k.t_c_general_w, critical_transmission(general_w, 0.0).value},
        {"t_c_collective_direct", k.t_c_collective_direct, critical_transmission(coh_direct, 0.0).value},
        {"eps_c_direct_coherent", k.eps_c_direct_coherent, critical_noise(coh_direct, near_lossless).value},
        {"eps_c_reverse_coherent", k.eps_c_reverse_coherent, critical_noise(coh_reverse, near_lossless).value},
        {"eps_c_squeezed", k.eps_c_squeezed, critical_noise(sq_reverse, near_lossless).value},
    };
}

} // namespace cvqkd
