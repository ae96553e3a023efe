#include "pdt/simulator.hpp"

#include "pdt/inference.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

namespace pdt::sim {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

std::vector<StudentScript> gen_cohort(const Graph& graph, const CohortConfig& config) {
    std::vector<const Exercise*> pool;
    if (config.exercises.empty()) {
        for (const auto& ex : graph.exercises()) pool.push_back(&ex);
    } else {
        for (const auto& id : config.exercises) {
            const Exercise* ex = graph.find_exercise(id);
            if (ex == nullptr) throw UnknownExercise(id);
            pool.push_back(ex);
        }
    }
    if (pool.empty()) throw Error("no exercises to simulate");

    std::set<SkillId> used;
    for (const auto* ex : pool) used.insert(ex->skills.begin(), ex->skills.end());

    std::vector<StudentScript> out;
    for (int s = 0; s < config.students; ++s) {
        std::seed_seq seq{config.seed, static_cast<std::uint64_t>(s)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::normal_distribution<double> step(0.0, 1.0);

        StudentScript script;
        script.student = "sim" + std::to_string(s);
        std::map<SkillId, double> rates;
        for (const auto& skill : used) rates[skill] = config.initial_rate ? *config.initial_rate : unit(rng);
        for (int k = 0; k < config.trials; ++k) {
            const Exercise* ex = pool[static_cast<std::size_t>(rng() % pool.size())];
            const double truth = compile(ex->setup).evaluate(rates);
            const Outcome outcome = unit(rng) < truth ? Outcome::Success : Outcome::Failure;
            const Timestamp at = config.start + static_cast<Timestamp>(k) * config.spacing;
            script.steps.push_back({{script.student, ex->id, outcome, at}, truth});
            if (config.sigma > 0.0) {
                for (auto& [skill, p] : rates) {
                    const double l = std::clamp(logit(p), -config.logit_bound, config.logit_bound);
                    p = logistic(std::clamp(l + config.sigma * step(rng), -config.logit_bound, config.logit_bound));
                }
            }
        }
        script.final_rates = rates;
        out.push_back(std::move(script));
    }
    return out;
}

RunResult run(const Graph& graph, const std::vector<StudentScript>& scripts) {
    RunResult result;
    for (const auto& script : scripts) {
        StudentRecord record;
        for (const auto& step : script.steps) {
            const Exercise* ex = graph.find_exercise(step.obs.exercise);
            if (ex == nullptr) throw UnknownExercise(step.obs.exercise);
            std::map<SkillId, BasisCoefficients> dists;
            for (const auto& skill : ex->skills)
                dists[skill] = posterior(graph, record, skill, step.obs.at, false).coeffs;
            const double predicted = expected_success(compile(ex->setup), dists);
            result.predictions.push_back({script.student, ex->id, predicted, step.truth, step.obs.outcome});
            apply_observation(graph, record, step.obs);
        }
        const Timestamp end = record.last_at.value_or(0);
        for (const auto& [skill, truth] : script.final_rates) {
            const auto it = record.skills.find(skill);
            if (it == record.skills.end() || it->second.practice_count == 0) continue;
            const auto p = posterior(graph, record, skill, end);
            result.finals.push_back({script.student, skill, truth, p.mean, p.lower, p.upper});
        }
    }
    return result;
}

CalibrationReport calibration_report(const RunResult& result, int bins, std::size_t min_bin_count) {
    CalibrationReport report;
    report.min_bin_count = min_bin_count;
    report.bins.resize(static_cast<std::size_t>(bins));
    std::vector<double> successes(report.bins.size(), 0.0);
    for (int b = 0; b < bins; ++b) {
        report.bins[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / bins;
        report.bins[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / bins;
    }
    constexpr double kClip = 1e-12;
    for (const auto& p : result.predictions) {
        const double y = p.outcome == Outcome::Success ? 1.0 : 0.0;
        const auto b = static_cast<std::size_t>(std::clamp(static_cast<int>(p.predicted * bins), 0, bins - 1));
        auto& bin = report.bins[b];
        ++bin.count;
        bin.mean_predicted += p.predicted;
        successes[b] += y;
        report.brier += (p.predicted - y) * (p.predicted - y);
        const double q = std::clamp(p.predicted, kClip, 1.0 - kClip);
        report.log_loss -= y * std::log(q) + (1.0 - y) * std::log(1.0 - q);
    }
    report.predictions = result.predictions.size();
    if (report.predictions > 0) {
        report.brier /= static_cast<double>(report.predictions);
        report.log_loss /= static_cast<double>(report.predictions);
    }
    for (std::size_t b = 0; b < report.bins.size(); ++b) {
        auto& bin = report.bins[b];
        if (bin.count == 0) continue;
        bin.mean_predicted /= static_cast<double>(bin.count);
        bin.empirical = successes[b] / static_cast<double>(bin.count);
        if (bin.count >= min_bin_count) report.max_gap = std::max(report.max_gap, bin.gap());
    }
    std::size_t covered = 0;
    for (const auto& f : result.finals)
        if (f.lower <= f.truth && f.truth <= f.upper) ++covered;
    report.intervals = result.finals.size();
    report.coverage = report.intervals == 0 ? 0.0 : static_cast<double>(covered) / report.intervals;
    return report;
}

std::string format_text(const CalibrationReport& r) {
    std::ostringstream os;
    char line[160];
    os << "bin          count   predicted  empirical  gap\n";
    for (const auto& b : r.bins) {
        std::snprintf(line, sizeof line, "[%.1f, %.1f)  %7zu  %9.4f  %9.4f  %.4f%s\n", b.lo, b.hi, b.count,
                      b.mean_predicted, b.empirical, b.gap(), b.count < r.min_bin_count ? "  (sparse)" : "");
        os << line;
    }
    std::snprintf(line, sizeof line,
                  "predictions %zu\nbrier %.6f\nlog_loss %.6f\nmax_gap %.6f (bins with >= %zu predictions)\n"
                  "coverage %.4f of %zu intervals\n",
                  r.predictions, r.brier, r.log_loss, r.max_gap, r.min_bin_count, r.coverage, r.intervals);
    os << line;
    return os.str();
}

std::string format_json(const CalibrationReport& r) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : r.bins)
        bins.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"count", b.count},
                        {"mean_predicted", b.mean_predicted},
                        {"empirical", b.empirical},
                        {"gap", b.gap()}});
    const nlohmann::json j = {{"predictions", r.predictions},   {"brier", r.brier},
                              {"log_loss", r.log_loss},         {"max_gap", r.max_gap},
                              {"min_bin_count", r.min_bin_count}, {"coverage", r.coverage},
                              {"intervals", r.intervals},       {"bins", bins}};
    return j.dump(2) + "\n";
}

}  // namespace pdt::sim
