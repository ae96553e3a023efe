#include <doctest.h>

#include "pdt/beta_basis.hpp"
#include "pdt/oracle.hpp"
#include "pdt/setup.hpp"

#include <random>

using pdt::ProbPolynomial;
using pdt::SetupExpr;
using Powers = ProbPolynomial::Powers;

TEST_CASE("parse") {
    using E = SetupExpr;
    CHECK(pdt::parse_setup("and(A, or(A, B))") ==
          E::all_of({E::skill_ref("A"), E::any_of({E::skill_ref("A"), E::skill_ref("B")})}));
    CHECK(pdt::parse_setup("A") == E::skill_ref("A"));
    CHECK(pdt::parse_setup("and(part(A, 0.5), B)") == E::all_of({E::part(E::skill_ref("A"), 0.5), E::skill_ref("B")}));
    CHECK(pdt::parse_setup("  AND ( x_1 ,\n Or(y.2, z-3) ) ") ==
          E::all_of({E::skill_ref("x_1"), E::any_of({E::skill_ref("y.2"), E::skill_ref("z-3")})}));
    CHECK(pdt::parse_setup("pick(A:0.3, B:0.7)") == E::pick({E::skill_ref("A"), E::skill_ref("B")}, {0.3, 0.7}));
    CHECK(pdt::parse_setup("pick(A, B, C, k=2)").pick_count == 2);
}

TEST_CASE("parse errors") {
    try {
        pdt::parse_setup("and(A, ");
        FAIL("expected a syntax error");
    } catch (const pdt::SyntaxError& e) {
        CHECK(e.position() == 7);
    }
    CHECK_THROWS_AS(pdt::parse_setup(""), pdt::SyntaxError);
    CHECK_THROWS_AS(pdt::parse_setup("and(A, B) C"), pdt::SyntaxError);
    CHECK_THROWS_AS(pdt::parse_setup("xor(A, B)"), pdt::SyntaxError);
    CHECK_THROWS_AS(pdt::parse_setup("and A"), pdt::SyntaxError);
    CHECK_THROWS_AS(pdt::parse_setup("and(part(A, x), B)"), pdt::SyntaxError);

    CHECK_THROWS_AS(pdt::parse_setup("and(A)"), pdt::ArityError);
    CHECK_THROWS_AS(pdt::parse_setup("or(A)"), pdt::ArityError);
    CHECK_THROWS_AS(pdt::parse_setup("pick(A)"), pdt::ArityError);
    CHECK_THROWS_AS(pdt::parse_setup("and(part(A), B)"), pdt::ArityError);
    CHECK_THROWS_AS(pdt::parse_setup("and(part(A, 0.5, 0.2), B)"), pdt::ArityError);

    CHECK_THROWS_AS(pdt::parse_setup("part(A, 0.5)"), pdt::ConstraintError);
    CHECK_THROWS_AS(pdt::parse_setup("pick(part(A, 0.5), B)"), pdt::ConstraintError);
    CHECK_THROWS_AS(pdt::parse_setup("and(part(A, 1.5), B)"), pdt::ConstraintError);
    CHECK_THROWS_AS(pdt::parse_setup("pick(A:0.3, B:0.3)"), pdt::ConstraintError);
    CHECK_THROWS_AS(pdt::parse_setup("pick(A:0.3, B)"), pdt::ConstraintError);
    CHECK_THROWS_AS(pdt::parse_setup("pick(A:0.5, B:0.5, k=2)"), pdt::ConstraintError);
    CHECK_THROWS_AS(pdt::parse_setup("pick(A, B, k=3)"), pdt::ConstraintError);
}

TEST_CASE("compile") {
    CHECK(pdt::compile(pdt::parse_setup("and(A, or(A, B))")).term_map() ==
          std::map<Powers, double>{{{{"A", 2}}, 1.0}, {{{"A", 1}, {"B", 1}}, 1.0}, {{{"A", 2}, {"B", 1}}, -1.0}});
    CHECK(pdt::compile(pdt::parse_setup("or(A, B)")).term_map() ==
          std::map<Powers, double>{{{{"A", 1}}, 1.0}, {{{"B", 1}}, 1.0}, {{{"A", 1}, {"B", 1}}, -1.0}});
    CHECK(pdt::compile(pdt::parse_setup("pick(A, B)")).term_map() ==
          std::map<Powers, double>{{{{"A", 1}}, 0.5}, {{{"B", 1}}, 0.5}});
    CHECK(pdt::compile(pdt::parse_setup("and(part(A, 0.25), B)")).term_map() ==
          std::map<Powers, double>{{{{"B", 1}}, 0.75}, {{{"A", 1}, {"B", 1}}, 0.25}});
    CHECK(pdt::compile(pdt::parse_setup("or(part(A, 0.25), B)")).term_map() ==
          std::map<Powers, double>{{{{"A", 1}}, 0.25}, {{{"B", 1}}, 1.0}, {{{"A", 1}, {"B", 1}}, -0.25}});

    const auto two_of_three = pdt::compile(pdt::parse_setup("pick(A, B, C, k=2)"));
    CHECK(two_of_three.evaluate({{"A", 0.2}, {"B", 0.5}, {"C", 0.9}}) ==
          doctest::Approx((0.2 * 0.5 + 0.2 * 0.9 + 0.5 * 0.9) / 3));

    const auto poly = pdt::compile(pdt::parse_setup("and(A, or(A, B))"));
    CHECK(poly.degree("A") == 2);
    CHECK(poly.degree("B") == 1);
    CHECK(poly.degree("Z") == 0);
    CHECK(poly.max_degree() == 2);
    CHECK(poly.to_string() == "-A^2*B + A^2 + A*B");
}

TEST_CASE("evaluate") {
    const auto either = pdt::compile(pdt::parse_setup("or(A, B)"));
    CHECK(either.evaluate({{"A", 1.0}, {"B", 0.0}}) == 1.0);
    const auto both = pdt::compile(pdt::parse_setup("and(A, B)"));
    CHECK(both.evaluate({{"A", 0.5}, {"B", 0.5}}) == 0.25);
    const auto nested = pdt::compile(pdt::parse_setup("and(A, or(A, B))"));
    CHECK(nested.evaluate({{"A", 0.5}, {"B", 0.5}}) == doctest::Approx(0.375).epsilon(1e-15));
    CHECK_THROWS_AS(both.evaluate({{"A", 0.5}}), pdt::MissingVariable);
}

TEST_CASE("expected_value") {
    const auto flat = pdt::flat();
    const auto both = pdt::compile(pdt::parse_setup("and(A, B)"));
    CHECK(both.expected_value({{"A", flat}, {"B", flat}}) == doctest::Approx(0.25).epsilon(1e-15));
    const auto c = pdt::spike(23, 14);
    CHECK(pdt::compile(pdt::parse_setup("A")).expected_value({{"A", c}}) == doctest::Approx(pdt::mean(c)));
    const auto square = pdt::compile(pdt::parse_setup("and(A, A)"));
    CHECK(square.expected_value({{"A", flat}}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK_THROWS_AS(both.expected_value({{"A", flat}}), pdt::MissingSkillDistribution);
}

TEST_CASE("compiled polynomials follow the tree semantics") {
    std::mt19937_64 rng(42);
    const std::vector<pdt::SkillId> skills{"A", "B", "C", "D"};
    for (int trial = 0; trial < 300; ++trial) {
        const auto setup = pdt::oracle::random_setup(rng, skills, 4, trial % 3 == 0);
        const auto poly = pdt::compile(setup);
        const auto& vars = poly.variables();
        const std::size_t d = vars.size();
        CAPTURE(pdt::print_setup(setup));

        // Corners {0,1}^d.
        for (unsigned mask = 0; mask < (1u << d); ++mask) {
            std::map<pdt::SkillId, double> v;
            for (std::size_t k = 0; k < d; ++k) v[vars[k]] = (mask >> k) & 1u ? 1.0 : 0.0;
            CHECK(std::abs(poly.evaluate(v) - pdt::oracle::tree_success(setup, v)) < 1e-12);
        }
        // 5^d grid: values agree and stay in [0, 1].
        std::vector<int> idx(d, 0);
        while (true) {
            std::map<pdt::SkillId, double> v;
            for (std::size_t k = 0; k < d; ++k) v[vars[k]] = idx[k] / 4.0;
            const double x = poly.evaluate(v);
            CHECK(x >= -1e-12);
            CHECK(x <= 1.0 + 1e-12);
            CHECK(std::abs(x - pdt::oracle::tree_success(setup, v)) < 1e-12);
            std::size_t k = 0;
            while (k < d && ++idx[k] == 5) idx[k++] = 0;
            if (k == d) break;
        }
        // Print/parse round trip.
        CHECK(pdt::parse_setup(pdt::print_setup(setup)) == setup);
    }
}

TEST_CASE("expected_value agrees with Monte-Carlo") {
    std::mt19937_64 rng(7);
    const std::vector<pdt::SkillId> skills{"A", "B", "C"};
    for (int trial = 0; trial < 3; ++trial) {
        const auto setup = pdt::oracle::random_setup(rng, skills, 3, false);
        const auto poly = pdt::compile(setup);
        std::map<pdt::SkillId, pdt::BasisCoefficients> dists;
        for (const auto& s : poly.variables()) dists[s] = pdt::oracle::random_distribution(rng, 20);
        const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(trial);
        const auto mc = pdt::oracle::mc_expect([&](const auto& v) { return poly.evaluate(v); }, dists, 1000000, seed);
        CAPTURE(seed);
        CAPTURE(pdt::print_setup(setup));
        CHECK(std::abs(mc.mean - poly.expected_value(dists)) <= 3.0 * mc.stderr_);
    }
}

TEST_CASE("referenced skills and determinism") {
    const auto e = pdt::parse_setup("and(pick(A, B), or(part(C, 0.5), A))");
    CHECK(pdt::referenced_skills(e) == std::set<pdt::SkillId>{"A", "B", "C"});
    CHECK_FALSE(pdt::is_deterministic(e));
    CHECK(pdt::is_deterministic(pdt::parse_setup("and(A, or(B, C))")));
}
