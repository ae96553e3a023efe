#include "pdt/inference.hpp"

#include "pdt/beta_basis.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace pdt {

namespace {

void check_inputs(int n, int degree, const std::vector<SkillId>& vars,
                  const std::map<SkillId, BasisCoefficients>& dists) {
    if (n < 0) throw Error("inference order must be non-negative");
    if (n > kMaxOrder) throw OrderOverflow(n);
    if (n * degree > kMaxOrder) throw OrderOverflow(n * degree);
    for (const auto& skill : vars)
        if (!dists.contains(skill)) throw MissingSkillDistribution(skill);
}

// Polynomial in a_v and (1 - a_v), keyed by the exponent pair of every
// variable: key[2v] is the power of a_v, key[2v+1] the power of (1 - a_v).
class SplitPolynomial {
   public:
    using Key = std::vector<std::uint16_t>;

    explicit SplitPolynomial(std::size_t vars = 0) : vars_(vars) {}

    static SplitPolynomial constant(std::size_t vars, double value) {
        SplitPolynomial p(vars);
        if (value != 0.0) p.terms_[Key(2 * vars, 0)] = value;
        return p;
    }
    static SplitPolynomial factor(std::size_t vars, std::size_t v, bool success) {
        SplitPolynomial p(vars);
        Key key(2 * vars, 0);
        key[2 * v + (success ? 0 : 1)] = 1;
        p.terms_[key] = 1.0;
        return p;
    }

    SplitPolynomial& operator+=(const SplitPolynomial& other) {
        for (const auto& [key, coeff] : other.terms_) terms_[key] += coeff;
        return *this;
    }
    friend SplitPolynomial operator+(SplitPolynomial a, const SplitPolynomial& b) { return a += b; }
    friend SplitPolynomial operator*(double s, SplitPolynomial a) {
        for (auto& [key, coeff] : a.terms_) coeff *= s;
        return a;
    }
    friend SplitPolynomial operator*(const SplitPolynomial& a, const SplitPolynomial& b) {
        SplitPolynomial out(a.vars_);
        Key key(2 * a.vars_);
        for (const auto& [ka, ca] : a.terms_) {
            for (const auto& [kb, cb] : b.terms_) {
                for (std::size_t k = 0; k < key.size(); ++k) key[k] = static_cast<std::uint16_t>(ka[k] + kb[k]);
                out.terms_[key] += ca * cb;
            }
        }
        return out;
    }

    const std::map<Key, double>& terms() const { return terms_; }

   private:
    std::size_t vars_;
    std::map<Key, double> terms_;
};

struct Split {
    SplitPolynomial success;
    SplitPolynomial failure;
};

class TreeSplitter {
   public:
    explicit TreeSplitter(const std::vector<SkillId>& vars) : vars_(vars) {}

    Split operator()(const SetupExpr& e, NodeKind parent) const {
        const std::size_t nv = vars_.size();
        switch (e.kind) {
            case NodeKind::Skill: {
                const auto v = static_cast<std::size_t>(
                    std::lower_bound(vars_.begin(), vars_.end(), e.skill) - vars_.begin());
                return {SplitPolynomial::factor(nv, v, true), SplitPolynomial::factor(nv, v, false)};
            }
            case NodeKind::And:
            case NodeKind::Or: {
                std::vector<Split> children;
                for (const auto& child : e.children) children.push_back((*this)(child, e.kind));
                return e.kind == NodeKind::And ? all_of(children) : any_of(children);
            }
            case NodeKind::Pick: {
                std::vector<Split> children;
                for (const auto& child : e.children) children.push_back((*this)(child, e.kind));
                Split out{SplitPolynomial(nv), SplitPolynomial(nv)};
                if (e.pick_count == 1) {
                    const double uniform = 1.0 / static_cast<double>(children.size());
                    for (std::size_t j = 0; j < children.size(); ++j) {
                        const double w = e.weights.empty() ? uniform : e.weights[j];
                        out.success += w * children[j].success;
                        out.failure += w * children[j].failure;
                    }
                    return out;
                }
                std::vector<bool> mask(children.size(), false);
                std::fill(mask.begin(), mask.begin() + e.pick_count, true);
                std::vector<Split> combos;
                do {
                    std::vector<Split> chosen;
                    for (std::size_t j = 0; j < children.size(); ++j)
                        if (mask[j]) chosen.push_back(children[j]);
                    combos.push_back(all_of(chosen));
                } while (std::prev_permutation(mask.begin(), mask.end()));
                const double w = 1.0 / static_cast<double>(combos.size());
                for (const auto& s : combos) {
                    out.success += w * s.success;
                    out.failure += w * s.failure;
                }
                return out;
            }
            case NodeKind::Part: {
                const Split child = (*this)(e.children.front(), e.kind);
                const double p = e.fraction;
                const auto rest = SplitPolynomial::constant(nv, 1.0 - p);
                if (parent == NodeKind::And) return {rest + p * child.success, p * child.failure};
                if (parent == NodeKind::Or) return {p * child.success, rest + p * child.failure};
                throw ConstraintError("part() needs a surrounding and() or or()", 0);
            }
        }
        throw Error("unknown set-up node");
    }

   private:
    // Fails at the first failing child.
    Split all_of(const std::vector<Split>& children) const {
        const std::size_t nv = vars_.size();
        auto prefix = SplitPolynomial::constant(nv, 1.0);
        SplitPolynomial failure(nv);
        for (const auto& child : children) {
            failure += prefix * child.failure;
            prefix = prefix * child.success;
        }
        return {prefix, failure};
    }
    // Succeeds at the first succeeding child.
    Split any_of(const std::vector<Split>& children) const {
        const std::size_t nv = vars_.size();
        auto prefix = SplitPolynomial::constant(nv, 1.0);
        SplitPolynomial success(nv);
        for (const auto& child : children) {
            success += prefix * child.success;
            prefix = prefix * child.failure;
        }
        return {success, prefix};
    }

    const std::vector<SkillId>& vars_;
};

// E[a^p (1-a)^q] = sum_k c_k prod_{t<=p} (k+t)/(n+1+t) prod_{t<=q} (n-k+t)/(n+1+p+t).
class SplitMoments {
   public:
    explicit SplitMoments(const BasisCoefficients& c) : c_(c) {}

    double operator()(int p, int q) {
        const auto key = std::make_pair(p, q);
        if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
        const int n = order(c_);
        double total = 0.0;
        for (int k = 0; k <= n; ++k) {
            if (c_(k) == 0.0) continue;
            double ratio = 1.0;
            for (int t = 1; t <= p; ++t) ratio *= static_cast<double>(k + t) / (n + 1 + t);
            for (int t = 1; t <= q; ++t) ratio *= static_cast<double>(n - k + t) / (n + 1 + p + t);
            total += c_(k) * ratio;
        }
        cache_.emplace(key, total);
        return total;
    }

   private:
    const BasisCoefficients& c_;
    std::map<std::pair<int, int>, double> cache_;
};

}  // namespace

BasisCoefficients infer(const SetupExpr& setup, const std::map<SkillId, BasisCoefficients>& dists,
                        const InferenceConfig& config) {
    const int n = config.order;
    const auto skills = referenced_skills(setup);
    const std::vector<SkillId> vars(skills.begin(), skills.end());
    check_inputs(n, compile(setup).max_degree(), vars, dists);

    const Split split = TreeSplitter(vars)(setup, NodeKind::Skill);
    std::vector<SplitMoments> moments;
    moments.reserve(vars.size());
    for (const auto& skill : vars) moments.emplace_back(dists.at(skill));

    const std::size_t nv = vars.size();
    std::vector<SplitPolynomial> hit_pow{SplitPolynomial::constant(nv, 1.0)};
    std::vector<SplitPolynomial> miss_pow{SplitPolynomial::constant(nv, 1.0)};
    for (int k = 1; k <= n; ++k) {
        hit_pow.push_back(hit_pow.back() * split.success);
        miss_pow.push_back(miss_pow.back() * split.failure);
    }

    BasisCoefficients out(n + 1);
    for (int i = 0; i <= n; ++i) {
        const auto term = hit_pow[static_cast<std::size_t>(i)] * miss_pow[static_cast<std::size_t>(n - i)];
        double total = 0.0;
        for (const auto& [key, coeff] : term.terms()) {
            double value = coeff;
            for (std::size_t v = 0; v < nv; ++v) value *= moments[v](key[2 * v], key[2 * v + 1]);
            total += value;
        }
        out(i) = binomial(n, i) * total;
    }
    return normalize(out);
}

BasisCoefficients infer(const ProbPolynomial& poly, const std::map<SkillId, BasisCoefficients>& dists,
                        const InferenceConfig& config) {
    const int n = config.order;
    check_inputs(n, poly.max_degree(), poly.variables(), dists);

    // g_{i,n}(x) ~ C(n,i) x^i (1-x)^(n-i); the powers of x and 1-x are shared
    // across all i.
    const auto one = ProbPolynomial::constant(1.0);
    const ProbPolynomial miss = one - poly;
    std::vector<ProbPolynomial> hit_pow{one};
    std::vector<ProbPolynomial> miss_pow{one};
    for (int k = 1; k <= n; ++k) {
        hit_pow.push_back(hit_pow.back() * poly);
        miss_pow.push_back(miss_pow.back() * miss);
    }

    BasisCoefficients out(n + 1);
    for (int i = 0; i <= n; ++i) {
        const ProbPolynomial term = hit_pow[static_cast<std::size_t>(i)] *
                                    miss_pow[static_cast<std::size_t>(n - i)];
        out(i) = binomial(n, i) * term.expected_value(dists);
    }
    return normalize(out);
}

double expected_success(const ProbPolynomial& poly, const std::map<SkillId, BasisCoefficients>& dists) {
    return poly.expected_value(dists);
}

}  // namespace pdt
