#include "pdt/observe.hpp"

#include "pdt/polynomial.hpp"

namespace pdt {

HPolynomial<double> marginal_h(const ProbPolynomial& poly, const SkillId& skill, Outcome outcome,
                               const std::map<SkillId, BasisCoefficients>& others) {
    const auto& vars = poly.variables();
    const int np = poly.degree(skill);

    std::vector<std::vector<double>> moments(vars.size());
    std::size_t own = vars.size();
    for (std::size_t v = 0; v < vars.size(); ++v) {
        if (vars[v] == skill) {
            own = v;
            continue;
        }
        const auto it = others.find(vars[v]);
        if (it == others.end()) throw MissingSkillDistribution(vars[v]);
        moments[v] = moments_up_to(it->second, poly.degree(vars[v]));
    }

    Vector<double> k = Vector<double>::Zero(np + 1);
    for (const auto& [exps, coeff] : poly.terms()) {
        double term = coeff;
        for (std::size_t v = 0; v < vars.size(); ++v)
            if (v != own) term *= moments[v][static_cast<std::size_t>(exps[v])];
        k(own < vars.size() ? exps[own] : 0) += term;
    }
    if (outcome == Outcome::Failure) {
        k = -k;
        k(0) += 1.0;
    }
    return HPolynomial<double>::from_power(std::move(k));
}

}  // namespace pdt
