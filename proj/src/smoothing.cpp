#include "pdt/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace pdt {

void DecayParams::validate() const {
    if (t_half <= 0) throw Error("t_half must be positive");
    if (t_e0 <= 0) throw Error("t_e0 must be positive");
    if (n_half <= 0) throw Error("n_half must be positive");
    if (n_s_max < 1) throw Error("n_s_max must be at least 1");
}

double decay_ratio(Duration t_since, int practice_count, const DecayParams& params) {
    if (t_since < 0) throw Error("elapsed time must be non-negative");
    const double t_e = static_cast<double>(params.t_e0) *
                       std::pow(0.5, static_cast<double>(practice_count) / params.n_half);
    return std::pow(0.5, (static_cast<double>(t_since) + t_e) / static_cast<double>(params.t_half));
}

double time_decay_ratio(Duration t_since, const DecayParams& params) {
    if (t_since < 0) throw Error("elapsed time must be non-negative");
    return std::pow(0.5, static_cast<double>(t_since) / static_cast<double>(params.t_half));
}

DecayPlan decompose(double r, const DecayParams& params) {
    if (!(r > 0.0) || r > 1.0) throw Error("decay ratio must lie in (0, 1]");
    // Slack on the ceiling so that exact integers such as 2*0.8/0.2 do not
    // round up to the next order.
    constexpr double kCeilSlack = 1e-9;
    constexpr double kDoneTol = 1e-12;

    DecayPlan plan;
    plan.target_ratio = r;
    double remaining = r;
    while (remaining < 1.0 - kDoneTol) {
        const double ideal = 2.0 * remaining / (1.0 - remaining);
        const double rounded = std::max(1.0, std::ceil(ideal - kCeilSlack));
        if (rounded > params.n_s_max) break;
        const int n_s = static_cast<int>(rounded);
        const double sub = static_cast<double>(n_s) / (n_s + 2);
        plan.orders.push_back(n_s);
        plan.realized_ratio *= sub;
        remaining /= sub;
    }
    std::sort(plan.orders.begin(), plan.orders.end(), std::greater<>());
    return plan;
}

}  // namespace pdt
