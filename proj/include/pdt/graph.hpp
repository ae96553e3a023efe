#pragma once

// Course structure: skills (possibly composite), correlation edges between
// skills, exercises, and the decay/inference parameters that go with them.

#include "pdt/common.hpp"
#include "pdt/setup.hpp"
#include "pdt/smoothing.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdt {

struct Correlation {
    SkillId skill;
    int n_c = 5;
};

struct Skill {
    SkillId id;
    std::string name;
    /// Present for composite skills.
    std::optional<SetupExpr> setup;
    std::vector<Correlation> correlations;
    std::optional<int> inference_order;
};

struct Exercise {
    ExerciseId id;
    SetupExpr setup;
    /// Skills the set-up references, sorted.
    std::vector<SkillId> skills;
};

struct GraphParams {
    DecayParams decay;
    int n_i = 10;
    int n_c_cap = 10;
};

/// Largest set-up polynomial degree accepted in a graph.
inline constexpr int kMaxSetupDegree = 8;

class Graph {
   public:
    GraphParams params;

    void add_skill(Skill skill);
    void add_exercise(ExerciseId id, SetupExpr setup);

    const std::vector<Skill>& skills() const { return skills_; }
    const std::vector<Exercise>& exercises() const { return exercises_; }
    const Skill* find_skill(const SkillId& id) const;
    const Exercise* find_exercise(const ExerciseId& id) const;

    int inference_order(const Skill& skill) const { return skill.inference_order.value_or(params.n_i); }

   private:
    std::vector<Skill> skills_;
    std::vector<Exercise> exercises_;
    std::map<SkillId, std::size_t> skill_index_;
    std::map<ExerciseId, std::size_t> exercise_index_;
};

struct GraphIssue {
    std::string code;
    /// Skill or exercise id the issue is about; empty for graph-wide issues.
    std::string subject;
    std::string message;
};

struct ValidationReport {
    std::vector<GraphIssue> errors;
    std::vector<GraphIssue> warnings;

    bool ok() const { return errors.empty(); }
};

/// Structural checks; problems are reported, never thrown.
ValidationReport validate_graph(const Graph& graph);

struct GraphLoad {
    Graph graph;
    ValidationReport report;
};

/// Definition documents and config files give durations in (fractional) days.
Duration days_to_seconds(double days);
double seconds_to_days(Duration seconds);

/// Parses a graph definition document and validates it. Syntax problems
/// (including malformed set-ups) end up in the report like any other error.
/// Parameters missing from the document are taken from `defaults`.
GraphLoad load_graph(std::string_view text, const GraphParams& defaults = {});

std::string dump_graph(const Graph& graph);

class UnknownSkill : public Error {
   public:
    explicit UnknownSkill(const SkillId& id) : Error("unknown skill '" + id + "'") {}
};

class UnknownExercise : public Error {
   public:
    explicit UnknownExercise(const ExerciseId& id) : Error("unknown exercise '" + id + "'") {}
};

}  // namespace pdt
