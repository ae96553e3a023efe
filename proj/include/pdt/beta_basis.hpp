#pragma once

// Success-rate distributions as mixtures of beta pdfs
//
//   f(a) = sum_i c_i g_{i,n}(a),   g_{i,n}(a) = (n+1) C(n,i) a^i (1-a)^(n-i)
//
// g_{i,n} is the Beta(i+1, n-i+1) density, so a normalized coefficient vector
// sums to one and every statistic below is a weighted sum over the basis.

#include "pdt/common.hpp"

#include <cmath>
#include <utility>

namespace pdt {

template <class Derived>
int order(const Eigen::MatrixBase<Derived>& c) {
    return static_cast<int>(c.size()) - 1;
}

template <class Scalar = double>
Vector<Scalar> flat() {
    return Vector<Scalar>::Ones(1);
}

/// Point mass on basis function `index` of order `n`.
template <class Scalar = double>
Vector<Scalar> spike(int n, int index) {
    Vector<Scalar> c = Vector<Scalar>::Zero(n + 1);
    c(index) = Scalar(1);
    return c;
}

/// Clamps negatives to zero and rescales to unit sum. Throws AllZero when
/// nothing positive remains.
template <class Derived>
Vector<typename Derived::Scalar> normalize(const Eigen::MatrixBase<Derived>& c) {
    using Scalar = typename Derived::Scalar;
    Vector<Scalar> out = c.cwiseMax(Scalar(0));
    const Scalar total = out.sum();
    if (!(total > Scalar(0)) || !std::isfinite(static_cast<double>(total))) throw AllZero();
    out /= total;
    return out;
}

template <class Scalar>
Scalar basis_value(int i, int n, Scalar a) {
    using std::pow;
    if (a < Scalar(0) || a > Scalar(1)) return Scalar(0);
    return Scalar(n + 1) * binomial<Scalar>(n, i) * pow(a, i) * pow(Scalar(1) - a, n - i);
}

template <class Derived>
typename Derived::Scalar pdf_at(const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar a) {
    using Scalar = typename Derived::Scalar;
    if (a < Scalar(0) || a > Scalar(1)) return Scalar(0);
    const int n = order(c);
    Scalar value(0);
    for (int i = 0; i <= n; ++i) {
        if (c(i) != Scalar(0)) value += c(i) * basis_value(i, n, a);
    }
    return value;
}

template <class Derived>
typename Derived::Scalar mean(const Eigen::MatrixBase<Derived>& c) {
    using Scalar = typename Derived::Scalar;
    const int n = order(c);
    Scalar total(0);
    for (int i = 0; i <= n; ++i) total += c(i) * Scalar(i + 1);
    return total / Scalar(n + 2);
}

/// E[a^m] = sum_i c_i (n+1)!/(n+m+1)! (i+m)!/i!, with the factorial ratio
/// accumulated as prod_t (i+t)/(n+1+t).
template <class Derived>
typename Derived::Scalar moment(const Eigen::MatrixBase<Derived>& c, int m) {
    using Scalar = typename Derived::Scalar;
    const int n = order(c);
    Scalar total(0);
    for (int i = 0; i <= n; ++i) {
        if (c(i) == Scalar(0)) continue;
        Scalar ratio(1);
        for (int t = 1; t <= m; ++t) ratio *= Scalar(i + t) / Scalar(n + 1 + t);
        total += c(i) * ratio;
    }
    return total;
}

template <class Derived>
typename Derived::Scalar variance(const Eigen::MatrixBase<Derived>& c) {
    const auto mu = mean(c);
    return moment(c, 2) - mu * mu;
}

/// Distribution of the failure rate 1 - a.
template <class Derived>
Vector<typename Derived::Scalar> flip(const Eigen::MatrixBase<Derived>& c) {
    return c.reverse();
}

template <class Scalar>
struct CdfCoefficients {
    /// C_0..C_{n+1} over the order-(n+1) basis; C_0 = 0.
    Vector<Scalar> cum;

    int order() const { return static_cast<int>(cum.size()) - 1; }
};

template <class Derived>
CdfCoefficients<typename Derived::Scalar> cdf(const Eigen::MatrixBase<Derived>& c) {
    using Scalar = typename Derived::Scalar;
    const int n = order(c);
    CdfCoefficients<Scalar> out{Vector<Scalar>::Zero(n + 2)};
    for (int i = 1; i <= n + 1; ++i) out.cum(i) = out.cum(i - 1) + c(i - 1);
    return out;
}

// F(a) = 1/(n+2) sum_i C_i g_{i,n+1}(a). The 1/(n+2) factor is what makes
// F(1) = 1; for the flat prior it gives F(a) = a.
template <class Derived>
typename Derived::Scalar cdf_at(const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar a) {
    using Scalar = typename Derived::Scalar;
    if (a <= Scalar(0)) return Scalar(0);
    if (a >= Scalar(1)) return cdf(c).cum(order(c) + 1);
    const auto C = cdf(c);
    const int n1 = C.order();
    Scalar value(0);
    for (int i = 1; i <= n1; ++i) value += C.cum(i) * basis_value(i, n1, a);
    return value / Scalar(n1 + 1);
}

/// Inverse cdf by bisection on [0, 1].
template <class Derived>
typename Derived::Scalar quantile(const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar q,
                                  typename Derived::Scalar tol = 1e-9) {
    using Scalar = typename Derived::Scalar;
    Scalar lo(0), hi(1);
    while (hi - lo > tol) {
        const Scalar mid = (lo + hi) / Scalar(2);
        if (cdf_at(c, mid) < q)
            lo = mid;
        else
            hi = mid;
    }
    return (lo + hi) / Scalar(2);
}

/// Equal-tailed credible interval.
template <class Derived>
std::pair<typename Derived::Scalar, typename Derived::Scalar> credible_interval(
    const Eigen::MatrixBase<Derived>& c, typename Derived::Scalar lower = 0.05,
    typename Derived::Scalar upper = 0.95) {
    return {quantile(c, lower), quantile(c, upper)};
}

}  // namespace pdt
