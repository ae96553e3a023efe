#include "pdt/polynomial.hpp"

#include "pdt/beta_basis.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <sstream>

namespace pdt {

ProbPolynomial ProbPolynomial::constant(double value) {
    ProbPolynomial p;
    p.terms_[{}] = value;
    p.prune();
    return p;
}

ProbPolynomial ProbPolynomial::variable(const SkillId& skill) {
    ProbPolynomial p;
    p.variables_ = {skill};
    p.terms_[{1}] = 1.0;
    return p;
}

std::map<ProbPolynomial::Powers, double> ProbPolynomial::term_map() const {
    std::map<Powers, double> out;
    for (const auto& [exps, coeff] : terms_) {
        Powers powers;
        for (std::size_t v = 0; v < variables_.size(); ++v)
            if (exps[v] != 0) powers[variables_[v]] = exps[v];
        out[powers] += coeff;
    }
    return out;
}

int ProbPolynomial::degree(const SkillId& skill) const {
    const auto it = std::lower_bound(variables_.begin(), variables_.end(), skill);
    if (it == variables_.end() || *it != skill) return 0;
    const auto v = static_cast<std::size_t>(it - variables_.begin());
    int deg = 0;
    for (const auto& [exps, coeff] : terms_) deg = std::max(deg, exps[v]);
    return deg;
}

int ProbPolynomial::max_degree() const {
    int deg = 0;
    for (const auto& skill : variables_) deg = std::max(deg, degree(skill));
    return deg;
}

ProbPolynomial ProbPolynomial::with_variables(const std::vector<SkillId>& vars) const {
    if (vars == variables_) return *this;
    std::vector<std::size_t> target(variables_.size());
    for (std::size_t v = 0; v < variables_.size(); ++v)
        target[v] = static_cast<std::size_t>(
            std::lower_bound(vars.begin(), vars.end(), variables_[v]) - vars.begin());
    ProbPolynomial out;
    out.variables_ = vars;
    for (const auto& [exps, coeff] : terms_) {
        Exponents mapped(vars.size(), 0);
        for (std::size_t v = 0; v < exps.size(); ++v) mapped[target[v]] = exps[v];
        out.terms_[mapped] += coeff;
    }
    return out;
}

void ProbPolynomial::prune() {
    std::erase_if(terms_, [](const auto& term) { return term.second == 0.0; });
}

namespace {

std::vector<SkillId> merged_variables(const ProbPolynomial& a, const ProbPolynomial& b) {
    std::vector<SkillId> vars;
    std::set_union(a.variables().begin(), a.variables().end(), b.variables().begin(),
                   b.variables().end(), std::back_inserter(vars));
    return vars;
}

}  // namespace

ProbPolynomial operator+(const ProbPolynomial& a, const ProbPolynomial& b) {
    const auto vars = merged_variables(a, b);
    ProbPolynomial out = a.with_variables(vars);
    for (const auto& [exps, coeff] : b.with_variables(vars).terms_) out.terms_[exps] += coeff;
    out.prune();
    return out;
}

ProbPolynomial operator-(const ProbPolynomial& a, const ProbPolynomial& b) {
    return a + (-1.0) * b;
}

ProbPolynomial operator*(double s, const ProbPolynomial& a) {
    ProbPolynomial out = a;
    for (auto& [exps, coeff] : out.terms_) coeff *= s;
    out.prune();
    return out;
}

ProbPolynomial operator*(const ProbPolynomial& a, const ProbPolynomial& b) {
    const auto vars = merged_variables(a, b);
    const ProbPolynomial lhs = a.with_variables(vars);
    const ProbPolynomial rhs = b.with_variables(vars);
    ProbPolynomial out;
    out.variables_ = vars;
    for (const auto& [ea, ca] : lhs.terms_) {
        for (const auto& [eb, cb] : rhs.terms_) {
            ProbPolynomial::Exponents sum(vars.size());
            for (std::size_t v = 0; v < vars.size(); ++v) sum[v] = ea[v] + eb[v];
            out.terms_[sum] += ca * cb;
        }
    }
    out.prune();
    return out;
}

ProbPolynomial ProbPolynomial::pow(int exponent) const {
    if (exponent < 0) throw Error("negative polynomial power");
    ProbPolynomial result = constant(1.0);
    ProbPolynomial base = *this;
    while (exponent > 0) {
        if (exponent & 1) result = result * base;
        exponent >>= 1;
        if (exponent > 0) base = base * base;
    }
    return result;
}

double ProbPolynomial::evaluate(const std::map<SkillId, double>& assignment) const {
    std::vector<double> values;
    values.reserve(variables_.size());
    for (const auto& skill : variables_) {
        const auto it = assignment.find(skill);
        if (it == assignment.end()) throw MissingVariable(skill);
        values.push_back(it->second);
    }
    double total = 0.0;
    for (const auto& [exps, coeff] : terms_) {
        double term = coeff;
        for (std::size_t v = 0; v < exps.size(); ++v) term *= std::pow(values[v], exps[v]);
        total += term;
    }
    return total;
}

std::vector<double> moments_up_to(const BasisCoefficients& c, int max_power) {
    std::vector<double> out(static_cast<std::size_t>(max_power) + 1);
    out[0] = 1.0;
    for (int m = 1; m <= max_power; ++m) out[static_cast<std::size_t>(m)] = moment(c, m);
    return out;
}

double ProbPolynomial::expected_value(const std::map<SkillId, BasisCoefficients>& dists) const {
    std::vector<std::vector<double>> moments;
    moments.reserve(variables_.size());
    for (const auto& skill : variables_) {
        const auto it = dists.find(skill);
        if (it == dists.end()) throw MissingSkillDistribution(skill);
        moments.push_back(moments_up_to(it->second, degree(skill)));
    }
    double total = 0.0;
    for (const auto& [exps, coeff] : terms_) {
        double term = coeff;
        for (std::size_t v = 0; v < exps.size(); ++v)
            term *= moments[v][static_cast<std::size_t>(exps[v])];
        total += term;
    }
    return total;
}

std::string ProbPolynomial::to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream out;
    out.precision(17);
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [exps, coeff] = *it;
        double magnitude = coeff;
        if (first) {
            if (coeff < 0) out << "-";
        } else {
            out << (coeff < 0 ? " - " : " + ");
        }
        magnitude = std::abs(coeff);
        first = false;
        bool any_var = false;
        std::ostringstream vars;
        for (std::size_t v = 0; v < exps.size(); ++v) {
            if (exps[v] == 0) continue;
            if (any_var) vars << "*";
            vars << variables_[v];
            if (exps[v] > 1) vars << "^" << exps[v];
            any_var = true;
        }
        if (!any_var) {
            out << magnitude;
        } else {
            if (magnitude != 1.0) out << magnitude << "*";
            out << vars.str();
        }
    }
    return out.str();
}

}  // namespace pdt
