#include "pdt/graph.hpp"

#include <json.hpp>

#include <cmath>
#include <functional>
#include <set>

namespace pdt {

using nlohmann::json;

void Graph::add_skill(Skill skill) {
    skill_index_.emplace(skill.id, skills_.size());
    skills_.push_back(std::move(skill));
}

void Graph::add_exercise(ExerciseId id, SetupExpr setup) {
    const auto refs = referenced_skills(setup);
    exercise_index_.emplace(id, exercises_.size());
    exercises_.push_back({std::move(id), std::move(setup), {refs.begin(), refs.end()}});
}

const Skill* Graph::find_skill(const SkillId& id) const {
    const auto it = skill_index_.find(id);
    return it == skill_index_.end() ? nullptr : &skills_[it->second];
}

const Exercise* Graph::find_exercise(const ExerciseId& id) const {
    const auto it = exercise_index_.find(id);
    return it == exercise_index_.end() ? nullptr : &exercises_[it->second];
}

namespace {

struct Reporter {
    ValidationReport& report;
    void error(std::string code, std::string subject, std::string message) {
        report.errors.push_back({std::move(code), std::move(subject), std::move(message)});
    }
    void warning(std::string code, std::string subject, std::string message) {
        report.warnings.push_back({std::move(code), std::move(subject), std::move(message)});
    }
};

void check_params(const GraphParams& p, Reporter& r) {
    try {
        p.decay.validate();
    } catch (const Error& e) {
        r.error("invalid_params", "", e.what());
    }
    if (p.decay.n_s_max > kMaxOrder - kMaxSetupDegree)
        r.error("invalid_params", "", "n_s_max leaves no room for updates below the maximum order " +
                                          std::to_string(kMaxOrder));
    if (p.n_i < 1 || p.n_i > kMaxOrder) r.error("invalid_params", "", "n_i out of range");
    if (p.n_c_cap < 1 || p.n_c_cap > 10) r.error("invalid_params", "", "n_c_cap must lie in [1, 10]");
}

int setup_degree(const SetupExpr& setup) { return compile(setup).max_degree(); }

void check_degree(const SetupExpr& setup, int n_i, const std::string& subject, Reporter& r) {
    const int degree = setup_degree(setup);
    if (degree > kMaxSetupDegree)
        r.error("degree_bound", subject,
                "set-up degree " + std::to_string(degree) + " exceeds " + std::to_string(kMaxSetupDegree));
    else if (n_i * degree > kMaxOrder)
        r.error("order_headroom", subject,
                "inference order " + std::to_string(n_i) + " times degree " + std::to_string(degree) +
                    " exceeds " + std::to_string(kMaxOrder));
}

void check_cycles(const Graph& graph, Reporter& r) {
    enum class Mark { None, Active, Done };
    std::map<SkillId, Mark> marks;
    std::set<SkillId> reported;
    std::vector<SkillId> path;
    std::function<void(const Skill&)> visit = [&](const Skill& skill) {
        marks[skill.id] = Mark::Active;
        path.push_back(skill.id);
        if (skill.setup) {
            for (const auto& ref : referenced_skills(*skill.setup)) {
                const Skill* next = graph.find_skill(ref);
                if (next == nullptr) continue;
                const Mark m = marks[ref];
                if (m == Mark::Active) {
                    std::string loop;
                    bool on = false;
                    for (const auto& id : path) {
                        on = on || id == ref;
                        if (on) loop += id + " -> ";
                    }
                    if (reported.insert(ref).second)
                        r.error("cycle", ref, "set-ups form a cycle: " + loop + ref);
                } else if (m == Mark::None) {
                    visit(*next);
                }
            }
        }
        path.pop_back();
        marks[skill.id] = Mark::Done;
    };
    for (const auto& skill : graph.skills())
        if (marks[skill.id] == Mark::None) visit(skill);
}

void check_correlations(const Graph& graph, Reporter& r) {
    const int cap = graph.params.n_c_cap;
    for (const auto& skill : graph.skills()) {
        std::set<SkillId> seen;
        for (const auto& edge : skill.correlations) {
            if (edge.skill == skill.id) {
                r.error("self_correlation", skill.id, "a skill cannot be correlated with itself");
                continue;
            }
            if (!seen.insert(edge.skill).second)
                r.error("duplicate_correlation", skill.id, "correlation with '" + edge.skill + "' listed twice");
            if (edge.n_c < 1 || edge.n_c > cap)
                r.error("correlation_order", skill.id,
                        "n_c = " + std::to_string(edge.n_c) + " for '" + edge.skill + "' outside [1, " +
                            std::to_string(cap) + "]");
            const Skill* other = graph.find_skill(edge.skill);
            if (other == nullptr) {
                r.error("unknown_reference", skill.id, "correlated skill '" + edge.skill + "' does not exist");
                continue;
            }
            bool mirrored = false;
            for (const auto& back : other->correlations)
                mirrored = mirrored || (back.skill == skill.id && back.n_c == edge.n_c);
            if (!mirrored)
                r.error("asymmetric_correlation", skill.id,
                        "'" + edge.skill + "' does not list '" + skill.id + "' with the same n_c");
        }
        std::map<int, int> group_sizes;
        for (const auto& edge : skill.correlations) ++group_sizes[edge.n_c];
        for (const auto& [n_c, size] : group_sizes)
            if (size >= 2)
                r.warning("correlation_group", skill.id,
                          "group of " + std::to_string(size + 1) +
                              " mutually correlated skills; such groups are rare and may point to an "
                              "awkward course set-up");
    }
}

// Orders of the merged posterior: decayed own data, inferred subskills and one
// distribution per distinct correlation order.
void check_posterior_headroom(const Graph& graph, Reporter& r) {
    for (const auto& skill : graph.skills()) {
        int total = graph.params.decay.n_s_max;
        if (skill.setup) total += graph.inference_order(skill);
        std::set<int> orders;
        for (const auto& edge : skill.correlations) orders.insert(edge.n_c);
        for (int n_c : orders) total += n_c;
        if (total > kMaxOrder)
            r.error("order_headroom", skill.id,
                    "posterior order could reach " + std::to_string(total) + " > " + std::to_string(kMaxOrder));
    }
}

}  // namespace

ValidationReport validate_graph(const Graph& graph) {
    ValidationReport report;
    Reporter r{report};
    check_params(graph.params, r);

    std::set<SkillId> skill_ids;
    for (const auto& skill : graph.skills()) {
        if (skill.id.empty()) r.error("schema", "", "skill with empty id");
        if (!skill_ids.insert(skill.id).second) r.error("duplicate_id", skill.id, "skill listed twice");
        if (skill.inference_order && (*skill.inference_order < 1 || *skill.inference_order > kMaxOrder))
            r.error("invalid_params", skill.id, "inference_order out of range");
        if (!skill.setup) continue;
        for (const auto& ref : referenced_skills(*skill.setup))
            if (graph.find_skill(ref) == nullptr)
                r.error("unknown_reference", skill.id, "set-up references unknown skill '" + ref + "'");
        check_degree(*skill.setup, graph.inference_order(skill), skill.id, r);
    }
    check_cycles(graph, r);
    check_correlations(graph, r);
    check_posterior_headroom(graph, r);

    std::set<ExerciseId> exercise_ids;
    for (const auto& ex : graph.exercises()) {
        if (ex.id.empty()) r.error("schema", "", "exercise with empty id");
        if (!exercise_ids.insert(ex.id).second) r.error("duplicate_id", ex.id, "exercise listed twice");
        if (!is_deterministic(ex.setup))
            r.error("nondeterministic_exercise", ex.id, "exercise set-ups may only use and/or");
        for (const auto& ref : ex.skills)
            if (graph.find_skill(ref) == nullptr)
                r.error("unknown_reference", ex.id, "set-up references unknown skill '" + ref + "'");
        const int degree = setup_degree(ex.setup);
        if (degree > kMaxSetupDegree)
            r.error("degree_bound", ex.id,
                    "set-up degree " + std::to_string(degree) + " exceeds " + std::to_string(kMaxSetupDegree));
    }
    return report;
}

namespace {

std::optional<SetupExpr> parse_setup_field(const json& node, const std::string& subject, Reporter& r) {
    if (!node.is_string()) {
        r.error("schema", subject, "setup must be a string");
        return std::nullopt;
    }
    try {
        return parse_setup(node.get<std::string>());
    } catch (const SetupError& e) {
        r.error("setup_syntax", subject, e.what());
        return std::nullopt;
    }
}

}  // namespace

Duration days_to_seconds(double days) { return std::llround(days * static_cast<double>(kSecondsPerDay)); }
double seconds_to_days(Duration s) { return static_cast<double>(s) / static_cast<double>(kSecondsPerDay); }

GraphLoad load_graph(std::string_view text, const GraphParams& defaults) {
    GraphLoad out;
    out.graph.params = defaults;
    Reporter r{out.report};
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        r.error("syntax", "", e.what());
        return out;
    }
    try {
        if (!doc.is_object()) throw std::runtime_error("graph definition must be an object");
        if (doc.value("version", 1) != 1)
            r.error("version", "", "unsupported graph version " + doc["version"].dump());

        GraphParams& p = out.graph.params;
        if (doc.contains("params")) {
            const json& jp = doc.at("params");
            p.decay.t_half = days_to_seconds(jp.value("t_half_days", seconds_to_days(p.decay.t_half)));
            p.decay.t_e0 = days_to_seconds(jp.value("t_e0_days", seconds_to_days(p.decay.t_e0)));
            p.decay.n_half = jp.value("n_half", p.decay.n_half);
            p.decay.n_s_max = jp.value("n_s_max", p.decay.n_s_max);
            p.n_i = jp.value("n_i", p.n_i);
            p.n_c_cap = jp.value("n_c_cap", p.n_c_cap);
        }

        for (const json& js : doc.value("skills", json::array())) {
            Skill skill;
            skill.id = js.at("id").get<std::string>();
            skill.name = js.value("name", skill.id);
            if (js.contains("setup") && !js.at("setup").is_null()) {
                skill.setup = parse_setup_field(js.at("setup"), skill.id, r);
                if (!skill.setup) continue;
            }
            for (const json& jc : js.value("correlations", json::array()))
                skill.correlations.push_back({jc.at("skill").get<std::string>(), jc.value("n_c", 5)});
            if (js.contains("inference_order")) skill.inference_order = js.at("inference_order").get<int>();
            out.graph.add_skill(std::move(skill));
        }
        for (const json& je : doc.value("exercises", json::array())) {
            const std::string id = je.at("id").get<std::string>();
            if (auto setup = parse_setup_field(je.at("setup"), id, r))
                out.graph.add_exercise(id, std::move(*setup));
        }
    } catch (const std::exception& e) {
        r.error("schema", "", e.what());
        return out;
    }

    auto structural = validate_graph(out.graph);
    out.report.errors.insert(out.report.errors.end(), structural.errors.begin(), structural.errors.end());
    out.report.warnings.insert(out.report.warnings.end(), structural.warnings.begin(),
                               structural.warnings.end());
    return out;
}

std::string dump_graph(const Graph& graph) {
    const GraphParams& p = graph.params;
    json doc = {{"version", 1},
                {"params",
                 {{"t_half_days", seconds_to_days(p.decay.t_half)},
                  {"t_e0_days", seconds_to_days(p.decay.t_e0)},
                  {"n_half", p.decay.n_half},
                  {"n_s_max", p.decay.n_s_max},
                  {"n_i", p.n_i},
                  {"n_c_cap", p.n_c_cap}}}};
    json skills = json::array();
    for (const auto& s : graph.skills()) {
        json js = {{"id", s.id}, {"name", s.name}};
        if (s.setup) js["setup"] = print_setup(*s.setup);
        if (!s.correlations.empty()) {
            json jc = json::array();
            for (const auto& c : s.correlations) jc.push_back({{"skill", c.skill}, {"n_c", c.n_c}});
            js["correlations"] = jc;
        }
        if (s.inference_order) js["inference_order"] = *s.inference_order;
        skills.push_back(js);
    }
    json exercises = json::array();
    for (const auto& e : graph.exercises()) exercises.push_back({{"id", e.id}, {"setup", print_setup(e.setup)}});
    doc["skills"] = skills;
    doc["exercises"] = exercises;
    return doc.dump(2) + "\n";
}

}  // namespace pdt
