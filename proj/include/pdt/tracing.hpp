#pragma once

// Per-student state and the operations over it: assembling a skill posterior
// from own data, subskills and correlated skills; folding in an observation;
// ranking exercises.

#include "pdt/graph.hpp"
#include "pdt/observe.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pdt {

/// Stored per skill: coefficients after the latest observation and before
/// any smoothing.
struct SkillState {
    BasisCoefficients coeffs = flat();
    int practice_count = 0;
    Timestamp last_practiced = 0;

    bool operator==(const SkillState& other) const {
        return practice_count == other.practice_count && last_practiced == other.last_practiced &&
               coeffs.size() == other.coeffs.size() && coeffs == other.coeffs;
    }
};

struct StudentRecord {
    std::map<SkillId, SkillState> skills;
    /// Time of the latest observation; later observations may not precede it.
    std::optional<Timestamp> last_at;

    bool operator==(const StudentRecord&) const = default;
};

struct Observation {
    StudentId student;
    ExerciseId exercise;
    Outcome outcome = Outcome::Success;
    Timestamp at = 0;
};

class TimestampRegression : public Error {
   public:
    TimestampRegression(Timestamp at, Timestamp last)
        : Error("time " + std::to_string(at) + " precedes the latest observation at " + std::to_string(last)) {}
};

enum class EvidenceSource { Own, Subskills, Correlated };

std::string to_string(EvidenceSource source);

struct Evidence {
    EvidenceSource source = EvidenceSource::Own;
    std::vector<SkillId> skills;
    /// Correlation order for correlated evidence, 0 otherwise.
    int n_c = 0;
    BasisCoefficients coeffs;
    double mean = 0.5;
};

struct Posterior {
    SkillId skill;
    BasisCoefficients coeffs;
    double mean = 0.5;
    double lower = 0.05;
    double upper = 0.95;
    std::vector<Evidence> trace;
};

/// Stored distribution of `skill` smoothed forward to `now` by elapsed time.
/// A skill without observations stays flat at order 0.
BasisCoefficients read_decayed(const Graph& graph, const StudentRecord& record, const SkillId& skill,
                               Timestamp now);

/// The separate evidence streams about `skill` at `now`, each as its own
/// distribution, before merging. Own data always comes first.
std::vector<Evidence> collect_evidence(const Graph& graph, const StudentRecord& record, const SkillId& skill,
                                       Timestamp now);

/// Merges evidence in the given order and attaches mean and [5%, 95%] interval.
Posterior merge_evidence(const SkillId& skill, std::vector<Evidence> evidence, bool with_interval = true);

Posterior posterior(const Graph& graph, const StudentRecord& record, const SkillId& skill, Timestamp now,
                    bool with_interval = true);

/// Folds one observation into the record and returns the updated skills. The
/// record is left untouched when anything throws.
std::vector<SkillId> apply_observation(const Graph& graph, StudentRecord& record, const Observation& obs);

struct Recommendation {
    ExerciseId exercise;
    double expected_success = 0.5;
    bool in_window = false;
};

/// All exercises ranked by |expected success - window midpoint|, ties by id.
std::vector<Recommendation> recommend(const Graph& graph, const StudentRecord& record, Timestamp now,
                                      double lo = 0.4, double hi = 0.8);

}  // namespace pdt
