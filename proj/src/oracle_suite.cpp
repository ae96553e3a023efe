#include "pdt/oracle_suite.hpp"

#include "pdt/fusion.hpp"
#include "pdt/inference.hpp"
#include "pdt/observe.hpp"
#include "pdt/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace pdt::oracle {

namespace {

constexpr double kL1Threshold = 1e-6;

double l1(const BasisCoefficients& a, const BasisCoefficients& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    return (a - b).cwiseAbs().sum();
}

LawCheck l1_check(std::string law, std::string oracle) {
    LawCheck c;
    c.law = std::move(law);
    c.oracle = std::move(oracle);
    c.threshold = kL1Threshold;
    return c;
}

void record(LawCheck& check, double deviation) {
    ++check.cases;
    check.max_deviation = std::max(check.max_deviation, deviation);
}

std::function<double(double)> density(const BasisCoefficients& c) {
    return [c](double a) { return mixture_pdf(c, a); };
}

// Coefficients of E[g_{i,n}(x(values))] for all i at once, by tensor
// Gauss-Legendre quadrature over the skills in `dists`.
BasisCoefficients quad_infer(const SetupExpr& setup, const std::map<SkillId, BasisCoefficients>& dists, int n,
                             int points) {
    const GaussRule rule = gauss_legendre(points);
    std::vector<SkillId> skills;
    std::vector<std::vector<double>> weighted;
    for (const auto& [skill, c] : dists) {
        skills.push_back(skill);
        std::vector<double> w(rule.nodes.size());
        for (std::size_t k = 0; k < w.size(); ++k) w[k] = rule.weights[k] * mixture_pdf(c, rule.nodes[k]);
        weighted.push_back(std::move(w));
    }
    BasisCoefficients out = BasisCoefficients::Zero(n + 1);
    std::vector<std::size_t> index(skills.size(), 0);
    std::map<SkillId, double> values;
    while (true) {
        double weight = 1.0;
        for (std::size_t v = 0; v < skills.size(); ++v) {
            values[skills[v]] = rule.nodes[index[v]];
            weight *= weighted[v][index[v]];
        }
        const double x = tree_success(setup, values);
        for (int i = 0; i <= n; ++i) out(i) += weight * beta_pdf(x, i + 1.0, n - i + 1.0);
        std::size_t v = 0;
        while (v < skills.size() && ++index[v] == rule.nodes.size()) index[v++] = 0;
        if (v == skills.size()) break;
    }
    return out / out.sum();
}

int degree_in(const SetupExpr& setup, const SkillId& skill) { return compile(setup).degree(skill); }

}  // namespace

std::vector<LawCheck> run_suite(const SuiteConfig& config) {
    std::mt19937_64 rng(config.seed);
    const std::vector<SkillId> skills{"A", "B", "C"};
    std::vector<LawCheck> out;

    {
        auto check = l1_check("update_binary", "Simpson posterior, least-squares fit");
        while (check.cases < config.cases) {
            const auto prior = random_distribution(rng, 20);
            const auto outcome = rng() % 2 ? Outcome::Success : Outcome::Failure;
            const auto grid = quad_posterior(density(prior), [outcome](double a) {
                return outcome == Outcome::Success ? a : 1.0 - a;
            });
            const auto exact = update_binary(prior, outcome);
            record(check, l1(fit_coefficients(grid, order(exact)), exact));
        }
        out.push_back(check);
    }
    {
        auto check = l1_check("update_general", "Simpson posterior of the tree likelihood, least-squares fit");
        while (check.cases < config.cases) {
            const auto setup = random_setup(rng, skills, 2, rng() % 2 == 0);
            const int d = degree_in(setup, "A");
            if (d == 0 || d > 3) continue;
            const auto prior = random_distribution(rng, 12);
            std::map<SkillId, BasisCoefficients> others;
            for (const auto& s : referenced_skills(setup))
                if (s != "A") others[s] = random_distribution(rng, 6);
            const auto outcome = rng() % 2 ? Outcome::Success : Outcome::Failure;
            const auto exact = update_general(prior, marginal_h(compile(setup), "A", outcome, others));
            const auto likelihood = [&](double a) {
                return tensor_expect(
                    [&](const std::map<SkillId, double>& v) {
                        auto all = v;
                        all["A"] = a;
                        const double x = tree_success(setup, all);
                        return outcome == Outcome::Success ? x : 1.0 - x;
                    },
                    others, 8);
            };
            const auto grid = quad_posterior(density(prior), likelihood);
            record(check, l1(fit_coefficients(grid, order(exact)), exact));
        }
        out.push_back(check);
    }
    {
        auto check = l1_check("smooth", "Simpson integral through the joint prior");
        while (check.cases < config.cases) {
            const auto c = random_distribution(rng, 12);
            const int n_s = 1 + static_cast<int>(rng() % 16);
            const auto quad = normalize(quad_smooth_coefficients(density(c), n_s));
            record(check, l1(quad, smooth(c, n_s)));
        }
        out.push_back(check);
    }
    {
        auto check = l1_check("merge", "Simpson product of densities, least-squares fit");
        while (check.cases < config.cases) {
            const auto a = random_distribution(rng, 10);
            const auto b = random_distribution(rng, 10);
            const auto exact = merge(a, b);
            const auto grid = quad_posterior(density(a), density(b));
            record(check, l1(fit_coefficients(grid, order(exact)), exact));
        }
        out.push_back(check);
    }
    {
        auto check = l1_check("infer", "tensor Gauss-Legendre quadrature of the tree");
        while (check.cases < config.cases) {
            const auto setup = random_setup(rng, skills, 2, rng() % 2 == 0);
            if (compile(setup).max_degree() > 3) continue;
            std::map<SkillId, BasisCoefficients> dists;
            for (const auto& s : referenced_skills(setup)) dists[s] = random_distribution(rng, 8);
            const int n_i = 1 + static_cast<int>(rng() % 12);
            record(check, l1(quad_infer(setup, dists, n_i, 28), infer(setup, dists, {n_i})));
        }
        out.push_back(check);
    }
    {
        // Sampling the skills and running the tree; deviation in standard errors.
        LawCheck check;
        check.law = "expected_success";
        check.oracle = "Monte-Carlo, " + std::to_string(config.mc_samples) + " samples per case";
        check.threshold = 3.0;
        int within = 0;
        while (check.cases < config.cases) {
            const auto setup = random_setup(rng, skills, 2, rng() % 2 == 0);
            std::map<SkillId, BasisCoefficients> dists;
            for (const auto& s : referenced_skills(setup)) dists[s] = random_distribution(rng, 8);
            const auto mc = mc_expect([&](const std::map<SkillId, double>& v) { return tree_success(setup, v); },
                                      dists, config.mc_samples, rng());
            const double z = std::abs(mc.mean - expected_success(compile(setup), dists)) / mc.stderr_;
            record(check, z);
            if (z <= check.threshold) ++within;
        }
        check.within = static_cast<double>(within) / check.cases;
        out.push_back(check);
    }

    for (auto& c : out)
        c.passed = c.law == "expected_success" ? c.within >= 0.98 : c.max_deviation <= c.threshold;
    return out;
}

}  // namespace pdt::oracle
