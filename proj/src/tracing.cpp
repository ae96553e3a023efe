#include "pdt/tracing.hpp"

#include "pdt/fusion.hpp"
#include "pdt/inference.hpp"

#include <algorithm>
#include <cmath>

namespace pdt {

std::string to_string(EvidenceSource source) {
    switch (source) {
        case EvidenceSource::Own: return "own";
        case EvidenceSource::Subskills: return "subskills";
        case EvidenceSource::Correlated: return "correlated";
    }
    return "unknown";
}

namespace {

const SkillState* find_state(const StudentRecord& record, const SkillId& skill) {
    const auto it = record.skills.find(skill);
    return it == record.skills.end() || it->second.practice_count == 0 ? nullptr : &it->second;
}

Duration elapsed(const SkillState& state, Timestamp now) {
    if (now < state.last_practiced) throw TimestampRegression(now, state.last_practiced);
    return now - state.last_practiced;
}

// Decay before a new observation: elapsed time plus the equivalent time of
// the practice done so far.
BasisCoefficients record_decayed(const Graph& graph, const StudentRecord& record, const SkillId& skill,
                                 Timestamp at) {
    const SkillState* state = find_state(record, skill);
    if (state == nullptr) return flat();
    return apply_decay(state->coeffs, elapsed(*state, at), state->practice_count, graph.params.decay);
}

}  // namespace

BasisCoefficients read_decayed(const Graph& graph, const StudentRecord& record, const SkillId& skill,
                               Timestamp now) {
    const SkillState* state = find_state(record, skill);
    if (state == nullptr) return flat();
    return smooth_by_ratio(state->coeffs, time_decay_ratio(elapsed(*state, now), graph.params.decay),
                           graph.params.decay);
}

std::vector<Evidence> collect_evidence(const Graph& graph, const StudentRecord& record, const SkillId& skill_id,
                                       Timestamp now) {
    const Skill* skill = graph.find_skill(skill_id);
    if (skill == nullptr) throw UnknownSkill(skill_id);

    std::vector<Evidence> out;
    auto own = read_decayed(graph, record, skill_id, now);
    out.push_back({EvidenceSource::Own, {skill_id}, 0, own, mean(own)});

    if (skill->setup) {
        std::map<SkillId, BasisCoefficients> dists;
        for (const auto& sub : referenced_skills(*skill->setup)) dists[sub] = read_decayed(graph, record, sub, now);
        auto inferred = infer(*skill->setup, dists, {graph.inference_order(*skill)});
        std::vector<SkillId> subs;
        for (const auto& [id, c] : dists) subs.push_back(id);
        out.push_back({EvidenceSource::Subskills, subs, 0, inferred, mean(inferred)});
    }

    // Correlated skills sharing an order form one group (one joint prior).
    std::map<int, std::vector<SkillId>> groups;
    for (const auto& edge : skill->correlations) groups[edge.n_c].push_back(edge.skill);
    for (auto& [n_c, members] : groups) {
        std::sort(members.begin(), members.end());
        std::vector<BasisCoefficients> smoothed;
        for (const auto& other : members) smoothed.push_back(correlate(read_decayed(graph, record, other, now), n_c));
        auto combined = combine_group(smoothed);
        out.push_back({EvidenceSource::Correlated, members, n_c, combined, mean(combined)});
    }
    return out;
}

Posterior merge_evidence(const SkillId& skill, std::vector<Evidence> evidence, bool with_interval) {
    Posterior p;
    p.skill = skill;
    p.coeffs = flat();
    for (const auto& e : evidence) p.coeffs = merge(p.coeffs, e.coeffs);
    p.mean = mean(p.coeffs);
    if (with_interval) std::tie(p.lower, p.upper) = credible_interval(p.coeffs);
    p.trace = std::move(evidence);
    return p;
}

Posterior posterior(const Graph& graph, const StudentRecord& record, const SkillId& skill, Timestamp now,
                    bool with_interval) {
    return merge_evidence(skill, collect_evidence(graph, record, skill, now), with_interval);
}

std::vector<SkillId> apply_observation(const Graph& graph, StudentRecord& record, const Observation& obs) {
    const Exercise* ex = graph.find_exercise(obs.exercise);
    if (ex == nullptr) throw UnknownExercise(obs.exercise);
    if (record.last_at && obs.at < *record.last_at) throw TimestampRegression(obs.at, *record.last_at);
    for (const auto& skill : ex->skills)
        if (graph.find_skill(skill) == nullptr) throw UnknownSkill(skill);

    // Every likelihood factor is built from the same pre-observation snapshot.
    std::map<SkillId, BasisCoefficients> before;
    for (const auto& skill : ex->skills) before[skill] = record_decayed(graph, record, skill, obs.at);

    const ProbPolynomial poly = compile(ex->setup);
    StudentRecord next = record;
    for (const auto& skill : ex->skills) {
        SkillState& state = next.skills[skill];
        state.coeffs = update_general(before.at(skill), marginal_h(poly, skill, obs.outcome, before));
        ++state.practice_count;
        state.last_practiced = obs.at;
    }
    next.last_at = obs.at;
    record = std::move(next);
    return ex->skills;
}

std::vector<Recommendation> recommend(const Graph& graph, const StudentRecord& record, Timestamp now, double lo,
                                      double hi) {
    std::map<SkillId, BasisCoefficients> posteriors;
    for (const auto& ex : graph.exercises())
        for (const auto& skill : ex.skills)
            if (!posteriors.contains(skill)) posteriors[skill] = posterior(graph, record, skill, now, false).coeffs;

    const double mid = (lo + hi) / 2.0;
    std::vector<Recommendation> out;
    for (const auto& ex : graph.exercises()) {
        const double es = expected_success(compile(ex.setup), posteriors);
        out.push_back({ex.id, es, es >= lo && es <= hi});
    }
    // Distances within rounding noise count as ties.
    constexpr double kTie = 1e-12;
    std::sort(out.begin(), out.end(), [mid](const Recommendation& a, const Recommendation& b) {
        const double da = std::abs(a.expected_success - mid);
        const double db = std::abs(b.expected_success - mid);
        return std::abs(da - db) > kTie ? da < db : a.exercise < b.exercise;
    });
    return out;
}

}  // namespace pdt
