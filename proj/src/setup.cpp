#include "pdt/setup.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <optional>

namespace pdt {

SetupExpr SetupExpr::skill_ref(SkillId id) {
    SetupExpr e;
    e.kind = NodeKind::Skill;
    e.skill = std::move(id);
    return e;
}

SetupExpr SetupExpr::all_of(std::vector<SetupExpr> children) {
    SetupExpr e;
    e.kind = NodeKind::And;
    e.children = std::move(children);
    return e;
}

SetupExpr SetupExpr::any_of(std::vector<SetupExpr> children) {
    SetupExpr e;
    e.kind = NodeKind::Or;
    e.children = std::move(children);
    return e;
}

SetupExpr SetupExpr::pick(std::vector<SetupExpr> children, std::vector<double> weights, int count) {
    SetupExpr e;
    e.kind = NodeKind::Pick;
    e.children = std::move(children);
    e.weights = std::move(weights);
    e.pick_count = count;
    return e;
}

SetupExpr SetupExpr::part(SetupExpr child, double fraction) {
    SetupExpr e;
    e.kind = NodeKind::Part;
    e.children.push_back(std::move(child));
    e.fraction = fraction;
    return e;
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-';
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

class Parser {
   public:
    explicit Parser(std::string_view text) : text_(text) {}

    SetupExpr parse() {
        skip_ws();
        const std::size_t start = pos_;
        SetupExpr root = expr(std::nullopt);
        skip_ws();
        if (pos_ != text_.size()) throw SyntaxError("unexpected trailing input", pos_);
        if (root.kind == NodeKind::Part)
            throw ConstraintError("part() needs a surrounding and() or or()", start);
        return root;
    }

   private:
    SetupExpr expr(std::optional<NodeKind> parent) {
        skip_ws();
        const std::size_t start = pos_;
        if (pos_ >= text_.size()) throw SyntaxError("expected skill or operator", pos_);
        if (!is_ident_start(text_[pos_])) throw SyntaxError("expected skill or operator", pos_);
        std::size_t end = pos_;
        while (end < text_.size() && is_ident_char(text_[end])) ++end;
        const std::string_view word = text_.substr(pos_, end - pos_);
        pos_ = end;
        const std::string op = lower(word);
        const bool is_op = op == "and" || op == "or" || op == "pick" || op == "part";
        skip_ws();
        if (!is_op) {
            if (peek('(')) throw SyntaxError("unknown operator '" + std::string(word) + "'", start);
            return SetupExpr::skill_ref(std::string(word));
        }
        if (!peek('(')) throw SyntaxError("operator '" + op + "' requires '('", pos_);
        ++pos_;
        if (op == "and" || op == "or") return junction(op == "and" ? NodeKind::And : NodeKind::Or, start);
        if (op == "pick") return pick(start);
        if (parent != NodeKind::And && parent != NodeKind::Or)
            throw ConstraintError("part() needs a surrounding and() or or()", start);
        return part(start);
    }

    SetupExpr junction(NodeKind kind, std::size_t start) {
        std::vector<SetupExpr> children;
        children.push_back(expr(kind));
        while (accept(',')) children.push_back(expr(kind));
        expect(')');
        if (children.size() < 2)
            throw ArityError(std::string(kind == NodeKind::And ? "and" : "or") +
                                 "() needs at least two arguments",
                             start);
        SetupExpr e;
        e.kind = kind;
        e.children = std::move(children);
        return e;
    }

    SetupExpr pick(std::size_t start) {
        std::vector<SetupExpr> children;
        std::vector<std::optional<double>> weights;
        std::optional<int> count;
        do {
            skip_ws();
            if (at_count_clause()) {
                count = parse_count();
                break;
            }
            children.push_back(expr(NodeKind::Pick));
            if (accept(':')) {
                weights.push_back(number());
            } else {
                weights.push_back(std::nullopt);
            }
        } while (accept(','));
        expect(')');
        if (children.size() < 2) throw ArityError("pick() needs at least two arguments", start);
        const int k = count.value_or(1);
        if (k < 1 || k > static_cast<int>(children.size()))
            throw ConstraintError("pick() count must lie between 1 and the number of arguments", start);
        const auto given = std::count_if(weights.begin(), weights.end(),
                                         [](const auto& w) { return w.has_value(); });
        std::vector<double> w;
        if (given > 0) {
            if (given != static_cast<long>(weights.size()))
                throw ConstraintError("pick() weights must be given for all arguments or none", start);
            if (k != 1) throw ConstraintError("pick() weights require k=1", start);
            for (const auto& x : weights) {
                if (!(*x > 0.0)) throw ConstraintError("pick() weights must be positive", start);
                w.push_back(*x);
            }
            const double total = std::accumulate(w.begin(), w.end(), 0.0);
            if (std::abs(total - 1.0) > 1e-9)
                throw ConstraintError("pick() weights must sum to one", start);
        }
        return SetupExpr::pick(std::move(children), std::move(w), k);
    }

    SetupExpr part(std::size_t start) {
        SetupExpr child = expr(NodeKind::Part);
        if (!accept(',')) throw ArityError("part() takes a set-up and a fraction", pos_);
        const std::size_t fraction_pos = (skip_ws(), pos_);
        const double p = number();
        if (peek(',')) throw ArityError("part() takes a set-up and a fraction", start);
        expect(')');
        if (!(p > 0.0 && p < 1.0)) throw ConstraintError("part() fraction must lie in (0, 1)", fraction_pos);
        return SetupExpr::part(std::move(child), p);
    }

    bool at_count_clause() {
        std::size_t p = pos_;
        if (p >= text_.size() || (text_[p] != 'k' && text_[p] != 'K')) return false;
        ++p;
        while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) ++p;
        return p < text_.size() && text_[p] == '=';
    }

    int parse_count() {
        ++pos_;
        expect('=');
        skip_ws();
        const std::size_t start = pos_;
        int k = 0;
        const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), k);
        if (ec != std::errc()) throw SyntaxError("expected integer count", start);
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return k;
    }

    double number() {
        skip_ws();
        const std::size_t start = pos_;
        std::size_t end = pos_;
        while (end < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[end])) || text_[end] == '.' ||
                text_[end] == 'e' || text_[end] == 'E' || text_[end] == '-' || text_[end] == '+'))
            ++end;
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + end, value);
        if (ec != std::errc() || ptr != text_.data() + end || end == start)
            throw SyntaxError("expected decimal number", start);
        pos_ = end;
        return value;
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    bool accept(char c) {
        if (!peek(c)) return false;
        ++pos_;
        return true;
    }
    void expect(char c) {
        if (!accept(c)) throw SyntaxError(std::string("expected '") + c + "'", pos_);
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

void print_into(const SetupExpr& e, std::string& out) {
    switch (e.kind) {
        case NodeKind::Skill:
            out += e.skill;
            return;
        case NodeKind::Part:
            out += "part(";
            print_into(e.children.front(), out);
            out += ", " + format_number(e.fraction) + ")";
            return;
        case NodeKind::And:
        case NodeKind::Or:
        case NodeKind::Pick:
            break;
    }
    out += e.kind == NodeKind::And ? "and(" : e.kind == NodeKind::Or ? "or(" : "pick(";
    for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i > 0) out += ", ";
        print_into(e.children[i], out);
        if (!e.weights.empty()) out += ":" + format_number(e.weights[i]);
    }
    if (e.kind == NodeKind::Pick && e.pick_count != 1) out += ", k=" + std::to_string(e.pick_count);
    out += ")";
}

ProbPolynomial compile_node(const SetupExpr& e, NodeKind parent);

// Average of and-combinations over all k-subsets.
ProbPolynomial k_of_n(const std::vector<ProbPolynomial>& children, int k) {
    const int n = static_cast<int>(children.size());
    std::vector<bool> mask(static_cast<std::size_t>(n), false);
    std::fill(mask.begin(), mask.begin() + k, true);
    ProbPolynomial sum;
    int combos = 0;
    do {
        ProbPolynomial product = ProbPolynomial::constant(1.0);
        for (int i = 0; i < n; ++i)
            if (mask[static_cast<std::size_t>(i)]) product = product * children[static_cast<std::size_t>(i)];
        sum = sum + product;
        ++combos;
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return (1.0 / combos) * sum;
}

ProbPolynomial compile_node(const SetupExpr& e, NodeKind parent) {
    const auto one = ProbPolynomial::constant(1.0);
    switch (e.kind) {
        case NodeKind::Skill:
            return ProbPolynomial::variable(e.skill);
        case NodeKind::And: {
            ProbPolynomial product = compile_node(e.children.front(), e.kind);
            for (std::size_t i = 1; i < e.children.size(); ++i)
                product = product * compile_node(e.children[i], e.kind);
            return product;
        }
        case NodeKind::Or: {
            ProbPolynomial miss = one - compile_node(e.children.front(), e.kind);
            for (std::size_t i = 1; i < e.children.size(); ++i)
                miss = miss * (one - compile_node(e.children[i], e.kind));
            return one - miss;
        }
        case NodeKind::Pick: {
            std::vector<ProbPolynomial> children;
            for (const auto& child : e.children) children.push_back(compile_node(child, e.kind));
            if (e.pick_count != 1) return k_of_n(children, e.pick_count);
            ProbPolynomial sum;
            const double uniform = 1.0 / static_cast<double>(children.size());
            for (std::size_t i = 0; i < children.size(); ++i)
                sum = sum + (e.weights.empty() ? uniform : e.weights[i]) * children[i];
            return sum;
        }
        case NodeKind::Part: {
            const ProbPolynomial child = compile_node(e.children.front(), e.kind);
            if (parent == NodeKind::Or) return e.fraction * child;
            if (parent == NodeKind::And) return one - e.fraction * (one - child);
            throw ConstraintError("part() needs a surrounding and() or or()", 0);
        }
    }
    return {};
}

void collect(const SetupExpr& e, std::set<SkillId>& out) {
    if (e.kind == NodeKind::Skill) out.insert(e.skill);
    for (const auto& child : e.children) collect(child, out);
}

}  // namespace

SetupExpr parse_setup(std::string_view text) { return Parser(text).parse(); }

std::string print_setup(const SetupExpr& expr) {
    std::string out;
    print_into(expr, out);
    return out;
}

ProbPolynomial compile(const SetupExpr& expr) {
    if (expr.kind == NodeKind::Part) throw ConstraintError("part() needs a surrounding and() or or()", 0);
    return compile_node(expr, NodeKind::Skill);
}

std::set<SkillId> referenced_skills(const SetupExpr& expr) {
    std::set<SkillId> out;
    collect(expr, out);
    return out;
}

bool is_deterministic(const SetupExpr& expr) {
    if (expr.kind == NodeKind::Pick || expr.kind == NodeKind::Part) return false;
    return std::all_of(expr.children.begin(), expr.children.end(),
                       [](const SetupExpr& child) { return is_deterministic(child); });
}

}  // namespace pdt
