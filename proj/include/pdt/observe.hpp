#pragma once

// Folding exercise outcomes into a skill distribution.

#include "pdt/beta_basis.hpp"
#include "pdt/common.hpp"

#include <algorithm>
#include <map>

namespace pdt {

class ProbPolynomial;

enum class Outcome { Failure, Success };

/// Success on the posterior shifts every coefficient up one index (c*_i = i c_{i-1});
/// failure keeps the index (c*_i = (n+1-i) c_i). The order grows by one.
template <class Derived>
Vector<typename Derived::Scalar> update_binary(const Eigen::MatrixBase<Derived>& c, Outcome outcome) {
    using Scalar = typename Derived::Scalar;
    const int n = order(c);
    if (n + 1 > kMaxOrder) throw OrderOverflow(n + 1);
    Vector<Scalar> out = Vector<Scalar>::Zero(n + 2);
    if (outcome == Outcome::Success) {
        for (int i = 1; i <= n + 1; ++i) out(i) = Scalar(i) * c(i - 1);
    } else {
        for (int i = 0; i <= n; ++i) out(i) = Scalar(n + 1 - i) * c(i);
    }
    return normalize(out);
}

/// Monomial coefficients k_0..k_np to Bernstein coefficients k'_0..k'_np:
/// C(np, np-i) k'_i = sum_{j<=i} C(np-j, np-i) k_j.
template <class Derived>
Vector<typename Derived::Scalar> to_bernstein(const Eigen::MatrixBase<Derived>& power) {
    using Scalar = typename Derived::Scalar;
    const int np = order(power);
    Vector<Scalar> out(np + 1);
    for (int i = 0; i <= np; ++i) {
        Scalar acc(0);
        for (int j = 0; j <= i; ++j) acc += binomial<Scalar>(np - j, np - i) * power(j);
        out(i) = acc / binomial<Scalar>(np, np - i);
    }
    return out;
}

/// Likelihood factor h(a) of one skill, in both polynomial bases.
template <class Scalar>
struct HPolynomial {
    Vector<Scalar> power;
    Vector<Scalar> bernstein;

    static HPolynomial from_power(Vector<Scalar> k) {
        HPolynomial h;
        h.bernstein = to_bernstein(k);
        h.power = std::move(k);
        return h;
    }

    int order() const { return static_cast<int>(power.size()) - 1; }

    Scalar eval_power(Scalar a) const {
        Scalar value(0);
        for (int i = order(); i >= 0; --i) value = value * a + power(i);
        return value;
    }

    Scalar eval_bernstein(Scalar a) const {
        using std::pow;
        const int np = order();
        Scalar value(0);
        for (int i = 0; i <= np; ++i)
            value += bernstein(i) * binomial<Scalar>(np, i) * pow(a, i) * pow(Scalar(1) - a, np - i);
        return value;
    }
};

namespace detail {

// Coefficients of the product of two basis-form functions of orders n and m,
// expressed in the order n+m basis, up to a constant factor.
template <class DerivedA, class DerivedB>
Vector<typename DerivedA::Scalar> basis_product(const Eigen::MatrixBase<DerivedA>& c,
                                                const Eigen::MatrixBase<DerivedB>& k) {
    using Scalar = typename DerivedA::Scalar;
    const int n = order(c);
    const int np = order(k);
    const int total = n + np;
    if (total > kMaxOrder) throw OrderOverflow(total);
    Vector<Scalar> out(total + 1);
    for (int i = 0; i <= total; ++i) {
        Scalar acc(0);
        const int lo = std::max(0, i - n);
        const int hi = std::min(np, i);
        for (int j = lo; j <= hi; ++j)
            acc += binomial<Scalar>(i, j) * binomial<Scalar>(total - i, np - j) * c(i - j) * k(j);
        out(i) = acc;
    }
    return out;
}

}  // namespace detail

/// Posterior after multiplying the prior by h(a); the order grows by h's order.
template <class Derived, class Scalar = typename Derived::Scalar>
Vector<Scalar> update_general(const Eigen::MatrixBase<Derived>& c, const HPolynomial<Scalar>& h) {
    if ((h.bernstein.array() < Scalar(-1e-8)).any()) {
        constexpr int kSamples = 256;
        for (int s = 0; s <= kSamples; ++s) {
            if (h.eval_bernstein(Scalar(s) / Scalar(kSamples)) < Scalar(-1e-8))
                throw MalformedPolynomial("likelihood factor is negative on [0,1]");
        }
    }
    return normalize(detail::basis_product(c, h.bernstein));
}

/// Likelihood factor for `skill` after an outcome on an exercise with
/// polynomial `poly`: h(a) = E[x(a, .)] (or 1 - E[x(a, .)] on failure), the
/// expectation taken over the other skills under independence.
HPolynomial<double> marginal_h(const ProbPolynomial& poly, const SkillId& skill, Outcome outcome,
                               const std::map<SkillId, BasisCoefficients>& others);

}  // namespace pdt
