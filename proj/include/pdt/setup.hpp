#pragma once

// Exercise and skill set-ups:
//
//   expr := IDENT | op '(' args ')'
//   and(e, e, ...)              all required
//   or(e, e, ...)               any one suffices
//   pick(e[:w], e[:w], ...[, k=K])  one (or K) chosen per attempt
//   part(e, p)                  e needed in a fraction p of attempts
//
// Operator names are case-insensitive; whitespace is ignored.

#include "pdt/common.hpp"
#include "pdt/polynomial.hpp"

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pdt {

enum class NodeKind { Skill, And, Or, Pick, Part };

struct SetupExpr {
    NodeKind kind = NodeKind::Skill;
    SkillId skill;
    std::vector<SetupExpr> children;
    /// Pick weights, empty for uniform.
    std::vector<double> weights;
    /// Number of children picked together (k-of-n); only 1 allows weights.
    int pick_count = 1;
    /// Fraction of attempts that need the child of a part node.
    double fraction = 0.0;

    static SetupExpr skill_ref(SkillId id);
    static SetupExpr all_of(std::vector<SetupExpr> children);
    static SetupExpr any_of(std::vector<SetupExpr> children);
    static SetupExpr pick(std::vector<SetupExpr> children, std::vector<double> weights = {},
                          int count = 1);
    static SetupExpr part(SetupExpr child, double fraction);

    bool operator==(const SetupExpr&) const = default;
};

class SetupError : public Error {
   public:
    SetupError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

   private:
    std::size_t position_;
};

class SyntaxError : public SetupError {
   public:
    using SetupError::SetupError;
};

class ArityError : public SetupError {
   public:
    using SetupError::SetupError;
};

class ConstraintError : public SetupError {
   public:
    using SetupError::SetupError;
};

SetupExpr parse_setup(std::string_view text);

/// Canonical text form; parse_setup(print_setup(e)) == e.
std::string print_setup(const SetupExpr& expr);

ProbPolynomial compile(const SetupExpr& expr);

std::set<SkillId> referenced_skills(const SetupExpr& expr);

/// True when only skill references, and, or appear.
bool is_deterministic(const SetupExpr& expr);

}  // namespace pdt
