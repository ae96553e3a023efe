#pragma once

// Combining separate evidence about one skill.

#include "pdt/beta_basis.hpp"
#include "pdt/observe.hpp"
#include "pdt/smoothing.hpp"

#include <vector>

namespace pdt {

/// Product of two conditionally independent posteriors (both against the flat
/// prior). The result has order n1 + n2; its pdf is proportional to pdf1 * pdf2.
template <class DerivedA, class DerivedB>
Vector<typename DerivedA::Scalar> merge(const Eigen::MatrixBase<DerivedA>& d1,
                                        const Eigen::MatrixBase<DerivedB>& d2) {
    return normalize(detail::basis_product(d1, d2));
}

/// Evidence a correlated skill carries about this one: the same transform as
/// smoothing, with the correlation order n_c.
template <class Derived>
Vector<typename Derived::Scalar> correlate(const Eigen::MatrixBase<Derived>& d, int n_c) {
    return smooth(d, n_c);
}

/// Joint evidence of a group of mutually correlated skills, each already passed
/// through correlate() with the same order: element-wise product.
template <class Scalar>
Vector<Scalar> combine_group(const std::vector<Vector<Scalar>>& smoothed) {
    if (smoothed.empty()) throw Error("empty correlation group");
    Vector<Scalar> out = smoothed.front();
    for (std::size_t g = 1; g < smoothed.size(); ++g) {
        if (smoothed[g].size() != out.size())
            throw OrderMismatch("correlation group members must share one order");
        out = out.cwiseProduct(smoothed[g]);
    }
    return normalize(out);
}

}  // namespace pdt
