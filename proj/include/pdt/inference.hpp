#pragma once

// Distribution of an exercise (or composite skill) success rate, inferred
// from the distributions of the skills its set-up combines.

#include "pdt/common.hpp"
#include "pdt/polynomial.hpp"
#include "pdt/setup.hpp"

#include <map>

namespace pdt {

struct InferenceConfig {
    /// Order of the joint prior linking the polynomial value to the true rate.
    int order = 10;
};

/// c_i = E[g_{i,n_i}(x(a, b, ...))] under independent skills, normalized.
///
/// Works on the set-up tree: every node carries its success and failure
/// probabilities as polynomials in a and (1 - a) with non-negative
/// coefficients, so each term of x^i (1-x)^(n-i) has a positive expectation
/// and the sum is free of cancellation. Throws OrderOverflow when n_i times
/// the polynomial degree exceeds kMaxOrder.
BasisCoefficients infer(const SetupExpr& setup, const std::map<SkillId, BasisCoefficients>& dists,
                        const InferenceConfig& config = {});

/// Same quantity from the compiled polynomial alone, by monomial expansion
/// and raw moments. Alternating monomial coefficients cost accuracy as n_i
/// and the degree grow (around 1e-7 at n_i = 12 for degree-2 set-ups).
BasisCoefficients infer(const ProbPolynomial& poly, const std::map<SkillId, BasisCoefficients>& dists,
                        const InferenceConfig& config = {});

/// E[x(a, b, ...)], the mean of the unsmoothed success rate.
double expected_success(const ProbPolynomial& poly, const std::map<SkillId, BasisCoefficients>& dists);

}  // namespace pdt
