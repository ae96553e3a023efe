#include <doctest.h>

#include "pdt/beta_basis.hpp"
#include "pdt/oracle.hpp"

#include <random>

using pdt::BasisCoefficients;

namespace {

BasisCoefficients vec(std::initializer_list<double> values) {
    BasisCoefficients c(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double v : values) c(i++) = v;
    return c;
}

}  // namespace

TEST_CASE("normalize") {
    CHECK(pdt::normalize(vec({2, 2})).isApprox(vec({0.5, 0.5})));
    CHECK(pdt::normalize(vec({1})) == vec({1}));
    const auto clamped = pdt::normalize(vec({-1e-15, 1, 3}));
    CHECK(clamped(0) == 0.0);
    CHECK(clamped(1) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(clamped(2) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK_THROWS_AS(pdt::normalize(vec({0, 0})), pdt::AllZero);
    CHECK_THROWS_AS(pdt::normalize(vec({-1, 0})), pdt::AllZero);
}

TEST_CASE("pdf_at") {
    CHECK(pdt::pdf_at(pdt::flat(), 0.37) == doctest::Approx(1.0));
    CHECK(pdt::pdf_at(vec({0, 1}), 0.5) == doctest::Approx(1.0));
    CHECK(pdt::pdf_at(vec({0, 0, 1, 0}), 0.6) == doctest::Approx(1.728).epsilon(1e-14));
    CHECK(pdt::pdf_at(vec({0, 1}), 1.2) == 0.0);
    CHECK(pdt::pdf_at(vec({0, 1}), -0.1) == 0.0);
}

TEST_CASE("mean and moments") {
    CHECK(pdt::mean(pdt::spike(3, 2)) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(pdt::mean(pdt::flat()) == 0.5);
    CHECK(pdt::mean(pdt::spike(48, 29)) == doctest::Approx(0.6).epsilon(1e-15));

    CHECK(pdt::moment(pdt::flat(), 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(pdt::moment(pdt::flat(), 5) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(pdt::moment(vec({0, 1}), 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(pdt::moment(vec({0, 1}), 1) == pdt::mean(vec({0, 1})));
}

TEST_CASE("flip") {
    CHECK(pdt::flip(vec({0, 1})) == vec({1, 0}));
    CHECK(pdt::flip(pdt::flat()) == pdt::flat());
    const auto flipped = pdt::flip(pdt::spike(3, 2));
    CHECK(flipped == pdt::spike(3, 1));
    CHECK(pdt::mean(flipped) == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("cdf") {
    for (double a : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0})
        CHECK(pdt::cdf_at(pdt::flat(), a) == doctest::Approx(a).epsilon(1e-14));
    CHECK(pdt::cdf_at(vec({0, 1}), 0.5) == doctest::Approx(0.25).epsilon(1e-14));
    const auto C = pdt::cdf(vec({0.2, 0.3, 0.5}));
    CHECK(C.order() == 3);
    CHECK(C.cum(0) == 0.0);
    CHECK(C.cum(3) == doctest::Approx(1.0));
    CHECK(pdt::cdf_at(vec({0.2, 0.3, 0.5}), 1.0) == doctest::Approx(1.0));
}

TEST_CASE("quantile inverts the cdf") {
    const auto c = pdt::spike(23, 14);
    const auto [lo, hi] = pdt::credible_interval(c);
    CHECK(pdt::cdf_at(c, lo) == doctest::Approx(0.05).epsilon(1e-7));
    CHECK(pdt::cdf_at(c, hi) == doctest::Approx(0.95).epsilon(1e-7));
    CHECK(pdt::quantile(pdt::flat(), 0.3) == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("basis properties against quadrature") {
    std::mt19937_64 rng(20240819);
    for (int trial = 0; trial < 40; ++trial) {
        const auto c = pdt::oracle::random_distribution(rng, 40);
        CAPTURE(c.transpose());
        const double mass = pdt::oracle::integrate([&](double a) { return pdt::pdf_at(c, a); });
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
        const double mu = pdt::oracle::integrate([&](double a) { return a * pdt::pdf_at(c, a); });
        CHECK(std::abs(mu - pdt::mean(c)) < 1e-8);
        for (int m = 1; m <= 6; ++m) {
            const double q = pdt::oracle::integrate([&](double a) { return std::pow(a, m) * pdt::pdf_at(c, a); });
            CHECK(std::abs(q - pdt::moment(c, m)) < 1e-8);
        }
        // Flip is an involution and reflects the mean.
        CHECK(pdt::flip(pdt::flip(c)) == c);
        CHECK(std::abs(pdt::mean(pdt::flip(c)) + pdt::mean(c) - 1.0) < 1e-12);

        double previous = 0.0;
        for (int k = 1; k < 200; ++k) {
            const double a = k / 200.0;
            CHECK(pdt::pdf_at(c, a) >= 0.0);
            CHECK(std::abs(pdt::pdf_at(c, a) - pdt::oracle::mixture_pdf(c, a)) < 1e-9);
            const double F = pdt::cdf_at(c, a);
            CHECK(F >= previous - 1e-15);
            previous = F;
            const double h = 1e-5;
            const double slope = (pdt::cdf_at(c, a + h) - pdt::cdf_at(c, a - h)) / (2 * h);
            CHECK(std::abs(slope - pdt::pdf_at(c, a)) < 1e-4);
        }
        CHECK(pdt::cdf_at(c, 0.0) == 0.0);
        CHECK(pdt::cdf_at(c, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("long double instantiation") {
    using LVec = pdt::Vector<long double>;
    LVec c = LVec::Zero(4);
    c(2) = 1.0L;
    CHECK(static_cast<double>(pdt::mean(c)) == doctest::Approx(0.6));
}
