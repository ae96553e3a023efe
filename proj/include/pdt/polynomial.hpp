#pragma once

#include "pdt/common.hpp"

#include <map>
#include <string>
#include <vector>

namespace pdt {

class MissingVariable : public Error {
   public:
    explicit MissingVariable(const SkillId& skill)
        : Error("no value assigned to variable '" + skill + "'") {}
};

/// Sparse multivariate polynomial over skill success rates. Exponent vectors
/// are aligned with the sorted variable list; exact-zero terms are dropped.
class ProbPolynomial {
   public:
    using Exponents = std::vector<int>;
    using Powers = std::map<SkillId, int>;

    ProbPolynomial() = default;

    static ProbPolynomial constant(double value);
    static ProbPolynomial variable(const SkillId& skill);

    const std::vector<SkillId>& variables() const { return variables_; }
    const std::map<Exponents, double>& terms() const { return terms_; }

    /// Terms keyed by skill name; zero powers are omitted.
    std::map<Powers, double> term_map() const;

    /// Highest power of `skill` in any term (0 if absent).
    int degree(const SkillId& skill) const;
    int max_degree() const;

    ProbPolynomial pow(int exponent) const;

    double evaluate(const std::map<SkillId, double>& assignment) const;

    /// E[x] with independent variables, one moment lookup per factor.
    double expected_value(const std::map<SkillId, BasisCoefficients>& dists) const;

    std::string to_string() const;

    friend ProbPolynomial operator+(const ProbPolynomial& a, const ProbPolynomial& b);
    friend ProbPolynomial operator-(const ProbPolynomial& a, const ProbPolynomial& b);
    friend ProbPolynomial operator*(const ProbPolynomial& a, const ProbPolynomial& b);
    friend ProbPolynomial operator*(double s, const ProbPolynomial& a);

    bool operator==(const ProbPolynomial& other) const = default;

   private:
    ProbPolynomial with_variables(const std::vector<SkillId>& vars) const;
    void prune();

    std::vector<SkillId> variables_;
    std::map<Exponents, double> terms_;
};

/// Moments E[a^0..a^max_power] of one distribution.
std::vector<double> moments_up_to(const BasisCoefficients& c, int max_power);

}  // namespace pdt
