#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdt {

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Coefficient vector over the order-n beta basis; the order is size() - 1.
using BasisCoefficients = Vector<double>;

using SkillId = std::string;
using ExerciseId = std::string;
using StudentId = std::string;

/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;
/// Whole seconds.
using Duration = std::int64_t;

/// Largest order any stored or derived distribution may take.
inline constexpr int kMaxOrder = 160;

class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Every coefficient vanished after clamping; the update contradicts the data.
class AllZero : public Error {
   public:
    AllZero() : Error("all coefficients are zero after clamping") {}
};

class OrderOverflow : public Error {
   public:
    explicit OrderOverflow(int order)
        : Error("order " + std::to_string(order) + " exceeds maximum " +
                std::to_string(kMaxOrder)),
          order_(order) {}
    int order() const { return order_; }

   private:
    int order_;
};

class OrderMismatch : public Error {
   public:
    using Error::Error;
};

class MissingSkillDistribution : public Error {
   public:
    explicit MissingSkillDistribution(const SkillId& skill)
        : Error("no distribution for skill '" + skill + "'"), skill_(skill) {}
    const SkillId& skill() const { return skill_; }

   private:
    SkillId skill_;
};

class MalformedPolynomial : public Error {
   public:
    using Error::Error;
};

namespace detail {

// Pascal's triangle, built once per scalar type. Entries are exact while they
// fit the mantissa and correctly rounded sums beyond that.
template <class Scalar>
class BinomialTable {
   public:
    static constexpr int kRows = 4 * kMaxOrder + 1;

    static const BinomialTable& instance() {
        static const BinomialTable table;
        return table;
    }

    Scalar operator()(int n, int k) const {
        if (n < 0 || k < 0 || k > n) return Scalar(0);
        if (n >= kRows) throw OrderOverflow(n);
        return rows_[offset(n) + static_cast<std::size_t>(k)];
    }

   private:
    BinomialTable() {
        rows_.resize(offset(kRows));
        for (int n = 0; n < kRows; ++n) {
            auto* row = &rows_[offset(n)];
            row[0] = row[n] = Scalar(1);
            const auto* prev = n > 0 ? &rows_[offset(n - 1)] : nullptr;
            for (int k = 1; k < n; ++k) row[k] = prev[k - 1] + prev[k];
        }
    }
    static std::size_t offset(int n) {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2;
    }

    std::vector<Scalar> rows_;
};

}  // namespace detail

template <class Scalar = double>
Scalar binomial(int n, int k) {
    return detail::BinomialTable<Scalar>::instance()(n, k);
}

}  // namespace pdt
