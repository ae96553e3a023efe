#pragma once

// Smoothing toward the flat prior, and the schedule that turns elapsed time
// and practice into a sequence of integer smoothing orders.

#include "pdt/beta_basis.hpp"
#include "pdt/common.hpp"

#include <algorithm>
#include <vector>

namespace pdt {

inline constexpr Duration kSecondsPerDay = 86400;
inline constexpr Duration kSecondsPerYear = 31557600;  // 365.25 days
inline constexpr Duration kSecondsPerMonth = kSecondsPerYear / 12;

/// Passes a distribution through the joint prior of order `n_s`. The result
/// has order n_s and its mean obeys (E' - 1/2) = n_s/(n_s+2) (E - 1/2).
template <class Derived>
Vector<typename Derived::Scalar> smooth(const Eigen::MatrixBase<Derived>& c, int n_s) {
    using Scalar = typename Derived::Scalar;
    if (n_s < 0) throw Error("smoothing order must be non-negative");
    if (n_s > kMaxOrder) throw OrderOverflow(n_s);
    const int n = order(c);
    Vector<Scalar> out(n_s + 1);
    for (int i = 0; i <= n_s; ++i) {
        Scalar acc(0);
        for (int j = 0; j <= n; ++j) {
            if (c(j) == Scalar(0)) continue;
            acc += binomial<Scalar>(i + j, i) * binomial<Scalar>(n + n_s - i - j, n - j) * c(j);
        }
        out(i) = acc;
    }
    return normalize(out);
}

struct DecayParams {
    Duration t_half = kSecondsPerYear;
    Duration t_e0 = 2 * kSecondsPerMonth;
    int n_half = 8;
    int n_s_max = 120;

    /// Throws pdt::Error when any field is not strictly positive.
    void validate() const;
};

struct DecayPlan {
    double target_ratio = 1.0;
    /// Smoothing orders in application order (largest first).
    std::vector<int> orders;
    double realized_ratio = 1.0;
};

/// r = (1/2)^((t + t_e)/t_half) with t_e = t_e0 (1/2)^(count/n_half).
double decay_ratio(Duration t_since, int practice_count, const DecayParams& params);

/// Factors r into subratios n/(n+2) with integer n <= n_s_max.
DecayPlan decompose(double r, const DecayParams& params);

/// Elapsed-time part of the ratio alone, (1/2)^(t/t_half). Used when reading a
/// distribution between observations, where no practice step has happened.
double time_decay_ratio(Duration t_since, const DecayParams& params);

/// Lowers the order to `target` by scaling every component's counts by
/// target/n: g_{i,n} becomes the beta pdf at fractional index i*target/n,
/// split linearly between its two neighbours (which keeps its mean). Spikes
/// keep their shape up to the lost pseudo-observations.
template <class Derived>
Vector<typename Derived::Scalar> temper(const Eigen::MatrixBase<Derived>& c, int target) {
    using Scalar = typename Derived::Scalar;
    const int n = order(c);
    if (target < 0 || target > n) throw Error("temper target must lie in [0, order]");
    if (target == n) return c;
    Vector<Scalar> out = Vector<Scalar>::Zero(target + 1);
    for (int i = 0; i <= n; ++i) {
        const Scalar x = Scalar(i) * Scalar(target) / Scalar(n);
        const int lo = std::min(static_cast<int>(x), target);
        const Scalar frac = x - Scalar(lo);
        out(lo) += (Scalar(1) - frac) * c(i);
        if (frac > Scalar(0)) out(lo + 1) += frac * c(i);
    }
    return normalize(out);
}

/// Smooths by the plan for ratio r. When the plan is empty (the ratio is too
/// close to one for any order up to n_s_max) and the input order exceeds
/// n_s_max, the distribution is tempered down to n_s_max so stored orders stay
/// bounded without the extra spread a smoothing step would add.
template <class Derived>
Vector<typename Derived::Scalar> smooth_by_ratio(const Eigen::MatrixBase<Derived>& c, double r,
                                                 const DecayParams& params) {
    using Scalar = typename Derived::Scalar;
    const DecayPlan plan = decompose(r, params);
    Vector<Scalar> out = c;
    for (int n_s : plan.orders) out = smooth(out, n_s);
    if (plan.orders.empty() && order(out) > params.n_s_max) out = temper(out, params.n_s_max);
    return out;
}

/// Smooths a stored (post-update, pre-smoothing) distribution forward by the
/// elapsed time plus the equivalent time of `practice_count` earlier exercises.
template <class Derived>
Vector<typename Derived::Scalar> apply_decay(const Eigen::MatrixBase<Derived>& c, Duration t_since,
                                             int practice_count, const DecayParams& params) {
    return smooth_by_ratio(c, decay_ratio(t_since, practice_count, params), params);
}

}  // namespace pdt
