#include "pdt/oracle.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace pdt::oracle {

double beta_pdf(double x, double alpha, double beta) {
    if (x < 0.0 || x > 1.0) return 0.0;
    if (x == 0.0) return alpha == 1.0 ? beta : 0.0;
    if (x == 1.0) return beta == 1.0 ? alpha : 0.0;
    const double log_norm = std::lgamma(alpha + beta) - std::lgamma(alpha) - std::lgamma(beta);
    return std::exp(log_norm + (alpha - 1.0) * std::log(x) + (beta - 1.0) * std::log1p(-x));
}

double mixture_pdf(const BasisCoefficients& c, double x) {
    const int n = static_cast<int>(c.size()) - 1;
    double total = 0.0;
    for (int i = 0; i <= n; ++i)
        if (c(i) != 0.0) total += c(i) * beta_pdf(x, i + 1.0, n - i + 1.0);
    return total;
}

std::vector<double> uniform_grid(int points) {
    if (points < kDefaultGridPoints || points % 2 == 0)
        throw Error("grid needs an odd number of points, at least 2001");
    std::vector<double> x(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) x[static_cast<std::size_t>(k)] = static_cast<double>(k) / (points - 1);
    return x;
}

double simpson(const std::vector<double>& y) {
    const std::size_t n = y.size();
    if (n < 3 || n % 2 == 0) throw Error("simpson needs an odd number of samples");
    const double h = 1.0 / static_cast<double>(n - 1);
    double total = y.front() + y.back();
    for (std::size_t k = 1; k + 1 < n; ++k) total += (k % 2 == 1 ? 4.0 : 2.0) * y[k];
    return total * h / 3.0;
}

namespace {

double simpson_of(const std::function<double(double)>& f, int points) {
    std::vector<double> y(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) y[static_cast<std::size_t>(k)] = f(static_cast<double>(k) / (points - 1));
    return simpson(y);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double tol, int points, int max_doublings) {
    double previous = simpson_of(f, points);
    for (int d = 0; d < max_doublings; ++d) {
        points = 2 * points - 1;
        const double current = simpson_of(f, points);
        if (std::abs(current - previous) <= tol * std::max(1.0, std::abs(current))) return current;
        previous = current;
    }
    throw NonConvergence("quadrature did not stabilize");
}

GridPdf quad_posterior(const std::function<double(double)>& prior,
                       const std::function<double(double)>& likelihood, int points) {
    GridPdf out;
    out.x = uniform_grid(points);
    out.y.reserve(out.x.size());
    for (double a : out.x) out.y.push_back(prior(a) * likelihood(a));
    const double total = simpson(out.y);
    if (!(total > 0.0)) throw NonConvergence("posterior has no mass");
    for (double& v : out.y) v /= total;
    return out;
}

BasisCoefficients quad_smooth_coefficients(const std::function<double(double)>& pdf, int n_s) {
    BasisCoefficients c(n_s + 1);
    for (int i = 0; i <= n_s; ++i) {
        c(i) = integrate([&](double x) { return beta_pdf(x, i + 1.0, n_s - i + 1.0) * pdf(x); }) /
               (n_s + 1.0);
    }
    return c;
}

GridPdf quad_smooth(const std::function<double(double)>& pdf, int n_s, int points) {
    const BasisCoefficients c = quad_smooth_coefficients(pdf, n_s);
    GridPdf out;
    out.x = uniform_grid(points);
    for (double y : out.x) out.y.push_back(mixture_pdf(c, y));
    return out;
}

BasisCoefficients fit_coefficients(const GridPdf& pdf, int order) {
    const auto rows = static_cast<Eigen::Index>(pdf.x.size());
    Eigen::MatrixXd design(rows, order + 1);
    Eigen::VectorXd target(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double x = pdf.x[static_cast<std::size_t>(r)];
        for (int i = 0; i <= order; ++i) design(r, i) = beta_pdf(x, i + 1.0, order - i + 1.0);
        target(r) = pdf.y[static_cast<std::size_t>(r)];
    }
    BasisCoefficients c = design.colPivHouseholderQr().solve(target);
    return c / c.sum();
}

GaussRule gauss_legendre(int points) {
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(points));
    rule.weights.resize(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        double x = std::cos(std::numbers::pi * (k + 0.75) / (points + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= points; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = points * (x * p1 - p0) / (x * x - 1.0);
            const double step = p1 / dp;
            x -= step;
            if (std::abs(step) < 1e-16) break;
        }
        // Recompute the derivative at the converged node.
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= points; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        dp = points * (x * p1 - p0) / (x * x - 1.0);
        rule.nodes[static_cast<std::size_t>(k)] = 0.5 * (1.0 - x);
        rule.weights[static_cast<std::size_t>(k)] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

double tensor_expect(const std::function<double(const std::map<SkillId, double>&)>& fn,
                     const std::map<SkillId, BasisCoefficients>& dists, int points) {
    const GaussRule rule = gauss_legendre(points);
    std::vector<SkillId> skills;
    std::vector<std::vector<double>> weighted;  // rule weight * density at each node
    for (const auto& [skill, c] : dists) {
        skills.push_back(skill);
        std::vector<double> w(rule.nodes.size());
        for (std::size_t k = 0; k < rule.nodes.size(); ++k) w[k] = rule.weights[k] * mixture_pdf(c, rule.nodes[k]);
        weighted.push_back(std::move(w));
    }
    const std::size_t d = skills.size();
    std::vector<std::size_t> index(d, 0);
    std::map<SkillId, double> values;
    double total = 0.0;
    while (true) {
        double weight = 1.0;
        for (std::size_t v = 0; v < d; ++v) {
            values[skills[v]] = rule.nodes[index[v]];
            weight *= weighted[v][index[v]];
        }
        total += weight * fn(values);
        std::size_t v = 0;
        while (v < d && ++index[v] == rule.nodes.size()) index[v++] = 0;
        if (v == d) break;
    }
    return total;
}

double sample(const BasisCoefficients& c, std::mt19937_64& rng) {
    const int n = static_cast<int>(c.size()) - 1;
    std::discrete_distribution<int> pick(c.data(), c.data() + c.size());
    const int i = pick(rng);
    std::gamma_distribution<double> ga(i + 1.0, 1.0);
    std::gamma_distribution<double> gb(n - i + 1.0, 1.0);
    const double x = ga(rng);
    const double y = gb(rng);
    return x / (x + y);
}

McEstimate mc_expect(const std::function<double(const std::map<SkillId, double>&)>& fn,
                     const std::map<SkillId, BasisCoefficients>& dists, std::size_t samples,
                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<SkillId, double> values;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        for (const auto& [skill, c] : dists) values[skill] = sample(c, rng);
        const double v = fn(values);
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(samples);
    McEstimate est;
    est.mean = sum / n;
    est.stderr_ = std::sqrt(std::max(0.0, sum_sq / n - est.mean * est.mean) / (n - 1.0));
    est.seed = seed;
    est.samples = samples;
    return est;
}

BasisCoefficients random_distribution(std::mt19937_64& rng, int max_order) {
    std::uniform_int_distribution<int> order_dist(0, max_order);
    const int n = order_dist(rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    BasisCoefficients c = BasisCoefficients::Zero(n + 1);
    const double kind = u(rng);
    if (kind < 0.2) {
        std::uniform_int_distribution<int> at(0, n);
        c(at(rng)) = 1.0;
    } else if (kind < 0.4) {
        for (int i = 0; i <= n; ++i)
            if (u(rng) < 0.3) c(i) = u(rng);
        if (c.sum() == 0.0) c(n / 2) = 1.0;
    } else {
        for (int i = 0; i <= n; ++i) c(i) = -std::log(1.0 - u(rng));
    }
    return c / c.sum();
}

SetupExpr random_setup(std::mt19937_64& rng, const std::vector<SkillId>& skills, int depth,
                       bool deterministic) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> which(0, skills.size() - 1);
    auto leaf = [&] { return SetupExpr::skill_ref(skills[which(rng)]); };

    std::function<SetupExpr(int, bool)> node = [&](int remaining, bool allow_part) -> SetupExpr {
        if (remaining == 0 || u(rng) < 0.3) {
            SetupExpr e = leaf();
            if (allow_part && !deterministic && u(rng) < 0.25)
                return SetupExpr::part(std::move(e), 0.05 + 0.9 * u(rng));
            return e;
        }
        const int arity = 2 + static_cast<int>(u(rng) * 2.0);
        const double kind = u(rng);
        if (deterministic || kind < 0.7) {
            const bool is_and = kind < (deterministic ? 0.5 : 0.35);
            std::vector<SetupExpr> children;
            for (int k = 0; k < arity; ++k) children.push_back(node(remaining - 1, true));
            return is_and ? SetupExpr::all_of(std::move(children)) : SetupExpr::any_of(std::move(children));
        }
        std::vector<SetupExpr> children;
        for (int k = 0; k < arity; ++k) children.push_back(node(remaining - 1, false));
        if (kind < 0.8) return SetupExpr::pick(std::move(children));
        if (kind < 0.9) {
            std::vector<double> w;
            for (int k = 0; k < arity; ++k) w.push_back(0.1 + u(rng));
            double total = 0.0;
            for (double x : w) total += x;
            for (double& x : w) x /= total;
            return SetupExpr::pick(std::move(children), std::move(w));
        }
        return SetupExpr::pick(std::move(children), {}, 2);
    };
    return node(depth, false);
}

namespace {

double node_success(const SetupExpr& e, const std::map<SkillId, double>& rates) {
    switch (e.kind) {
        case NodeKind::Skill:
            return rates.at(e.skill);
        case NodeKind::And: {
            double p = 1.0;
            for (const auto& child : e.children) {
                if (child.kind == NodeKind::Part) {
                    // Needed in a fraction of attempts; otherwise the slot is free.
                    const double q = node_success(child.children.front(), rates);
                    p *= child.fraction * q + (1.0 - child.fraction);
                } else {
                    p *= node_success(child, rates);
                }
            }
            return p;
        }
        case NodeKind::Or: {
            double all_fail = 1.0;
            for (const auto& child : e.children) {
                double q = 0.0;
                if (child.kind == NodeKind::Part) {
                    // Available in a fraction of attempts; otherwise the route is closed.
                    q = child.fraction * node_success(child.children.front(), rates);
                } else {
                    q = node_success(child, rates);
                }
                all_fail *= 1.0 - q;
            }
            return 1.0 - all_fail;
        }
        case NodeKind::Pick: {
            const std::size_t n = e.children.size();
            if (e.pick_count == 1) {
                double p = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    p += (e.weights.empty() ? 1.0 / static_cast<double>(n) : e.weights[i]) *
                         node_success(e.children[i], rates);
                return p;
            }
            // Enumerate every k-subset by bitmask.
            double total = 0.0;
            int subsets = 0;
            for (unsigned mask = 0; mask < (1u << n); ++mask) {
                if (std::popcount(mask) != e.pick_count) continue;
                double p = 1.0;
                for (std::size_t i = 0; i < n; ++i)
                    if (mask & (1u << i)) p *= node_success(e.children[i], rates);
                total += p;
                ++subsets;
            }
            return total / subsets;
        }
        case NodeKind::Part:
            break;
    }
    throw Error("part() outside and()/or()");
}

}  // namespace

double tree_success(const SetupExpr& expr, const std::map<SkillId, double>& rates) {
    return node_success(expr, rates);
}

}  // namespace pdt::oracle
