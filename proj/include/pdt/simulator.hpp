#pragma once

// Synthetic students with known success rates, run through the tracker to
// measure how well its predictions are calibrated.

#include "pdt/tracing.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pdt::sim {

struct CohortConfig {
    int students = 20;
    int trials = 500;
    std::uint64_t seed = 7;
    /// Step size of the per-trial Gaussian random walk on logit(rate); 0 keeps
    /// rates static.
    double sigma = 0.0;
    /// A drifting rate is kept within logit(rate) in [-bound, bound].
    double logit_bound = 6.0;
    /// Starting rate for every skill; drawn uniformly from (0, 1) when unset.
    std::optional<double> initial_rate;
    Duration spacing = kSecondsPerDay;
    Timestamp start = 1'700'000'000;
    /// Exercises to draw from; all exercises of the graph when empty.
    std::vector<ExerciseId> exercises;
};

struct ScriptStep {
    Observation obs;
    /// True success probability of the attempt.
    double truth = 0.5;
};

struct StudentScript {
    StudentId student;
    std::vector<ScriptStep> steps;
    /// True rates after the last step.
    std::map<SkillId, double> final_rates;
};

std::vector<StudentScript> gen_cohort(const Graph& graph, const CohortConfig& config);

struct Prediction {
    StudentId student;
    ExerciseId exercise;
    double predicted = 0.5;
    double truth = 0.5;
    Outcome outcome = Outcome::Success;
};

struct FinalEstimate {
    StudentId student;
    SkillId skill;
    double truth = 0.5;
    double mean = 0.5;
    double lower = 0.0;
    double upper = 1.0;
};

struct RunResult {
    std::vector<Prediction> predictions;
    /// Posterior of every practiced skill after the last step.
    std::vector<FinalEstimate> finals;
};

/// Replays each script, predicting every attempt before its outcome is
/// folded in. The prediction is the expected success of the exercise
/// polynomial under the skill posteriors at the attempt time.
RunResult run(const Graph& graph, const std::vector<StudentScript>& scripts);

struct ReliabilityBin {
    double lo = 0.0;
    double hi = 0.1;
    std::size_t count = 0;
    double mean_predicted = 0.0;
    double empirical = 0.0;
    double gap() const { return count == 0 ? 0.0 : std::abs(mean_predicted - empirical); }
};

struct CalibrationReport {
    std::vector<ReliabilityBin> bins;
    std::size_t predictions = 0;
    double brier = 0.0;
    double log_loss = 0.0;
    /// Largest gap among bins holding at least `min_bin_count` predictions.
    double max_gap = 0.0;
    std::size_t min_bin_count = 0;
    /// Fraction of final [5%, 95%] intervals containing the true rate.
    double coverage = 0.0;
    std::size_t intervals = 0;
};

CalibrationReport calibration_report(const RunResult& result, int bins = 10, std::size_t min_bin_count = 500);

std::string format_text(const CalibrationReport& report);
std::string format_json(const CalibrationReport& report);

}  // namespace pdt::sim
