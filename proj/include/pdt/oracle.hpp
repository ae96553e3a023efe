#pragma once

// Brute-force reference computations: numerical quadrature and Monte-Carlo.
// Nothing here calls the closed-form coefficient laws; densities are
// evaluated from the Beta function directly.

#include "pdt/common.hpp"
#include "pdt/setup.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <vector>

namespace pdt::oracle {

class NonConvergence : public Error {
   public:
    using Error::Error;
};

/// Beta(alpha, beta) density via lgamma.
double beta_pdf(double x, double alpha, double beta);

/// Mixture density sum_i c_i Beta(i+1, n-i+1)(x).
double mixture_pdf(const BasisCoefficients& c, double x);

struct GridPdf {
    std::vector<double> x;
    std::vector<double> y;
};

inline constexpr int kDefaultGridPoints = 2001;

/// Uniform grid of `points` (odd, >= 2001) abscissae on [0, 1].
std::vector<double> uniform_grid(int points = kDefaultGridPoints);

/// Composite Simpson over uniformly spaced samples on [0, 1].
double simpson(const std::vector<double>& y);

/// Integral of f over [0, 1] by Simpson with grid doubling until two
/// successive estimates agree within `tol` (relative to max(1, |I|)).
double integrate(const std::function<double(double)>& f, double tol = 1e-11,
                 int points = kDefaultGridPoints, int max_doublings = 6);

/// Normalized prior(a) * likelihood(a) on a uniform grid.
GridPdf quad_posterior(const std::function<double(double)>& prior,
                       const std::function<double(double)>& likelihood, int points = kDefaultGridPoints);

/// Coefficients of the distribution pushed through the order-n_s joint prior,
/// c_i = 1/(n_s+1) * integral g_{i,n_s}(x) f(x) dx, by quadrature.
BasisCoefficients quad_smooth_coefficients(const std::function<double(double)>& pdf, int n_s);

/// The smoothed density on a uniform grid.
GridPdf quad_smooth(const std::function<double(double)>& pdf, int n_s, int points = kDefaultGridPoints);

/// Least-squares basis coefficients of a gridded density, normalized.
BasisCoefficients fit_coefficients(const GridPdf& pdf, int order);

/// Gauss-Legendre nodes and weights on [0, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussRule gauss_legendre(int points);

/// E[fn(values)] for independent skills by tensor-product Gauss-Legendre
/// quadrature. Exact for polynomial integrands of degree < 2*points per axis.
double tensor_expect(const std::function<double(const std::map<SkillId, double>&)>& fn,
                     const std::map<SkillId, BasisCoefficients>& dists, int points = 32);

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
};

/// Draws one success rate from a beta-basis mixture.
double sample(const BasisCoefficients& c, std::mt19937_64& rng);

McEstimate mc_expect(const std::function<double(const std::map<SkillId, double>&)>& fn,
                     const std::map<SkillId, BasisCoefficients>& dists, std::size_t samples,
                     std::uint64_t seed);

/// Random normalized coefficients of order in [0, max_order]: dense, sparse,
/// or a single spike.
BasisCoefficients random_distribution(std::mt19937_64& rng, int max_order);

/// Random set-up over `skills` with the given maximum depth. Deterministic
/// set-ups use only and/or.
SetupExpr random_setup(std::mt19937_64& rng, const std::vector<SkillId>& skills, int depth,
                       bool deterministic);

/// Probability the tree succeeds when each skill succeeds independently with
/// the given rate, by direct recursion over the tree (no polynomial algebra).
double tree_success(const SetupExpr& expr, const std::map<SkillId, double>& rates);

}  // namespace pdt::oracle
