#pragma once

// Live tracking service core: owns the graph and the store, serializes writes
// per student, and recovers from the log tail on start-up.

#include "pdt/store.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string_view>

namespace pdt {

class UnknownStudent : public Error {
   public:
    explicit UnknownStudent(const StudentId& id) : Error("unknown student '" + id + "'") {}
};

class InvalidGraph : public Error {
   public:
    using Error::Error;
};

/// Folds a whole log into fresh records, interpreting it against `graph`.
std::map<StudentId, StudentRecord> replay_log(const Graph& graph, const std::vector<LogEntry>& log);

struct RecordResult {
    std::uint64_t seq = 0;  // 0 for a dry run
    bool dry_run = false;
    std::vector<SkillId> updated;
    /// Posteriors of the updated skills at the observation time.
    std::vector<Posterior> posteriors;
};

class Tracker {
   public:
    /// Takes the graph stored in `store` (if any) and brings every student
    /// snapshot up to the end of the log.
    /// Graph parameters the definition leaves out come from `defaults`.
    explicit Tracker(std::unique_ptr<Store> store, GraphParams defaults = {});

    std::shared_ptr<const Graph> graph() const;
    /// Validates and, when there are no errors, persists and installs the graph.
    GraphLoad set_graph(std::string_view text);

    /// False when the student already exists.
    bool create_student(const StudentId& id, const std::string& request_key = {});
    bool has_student(const StudentId& id) const;
    std::vector<StudentId> students() const;
    StudentRecord record_of(const StudentId& id) const;

    /// Write-ahead: the log entry is appended before the snapshot is replaced.
    /// A dry run computes the same result and persists nothing.
    RecordResult record(const Observation& obs, bool dry_run = false, const std::string& request_key = {});

    Posterior posterior(const StudentId& student, const SkillId& skill, Timestamp now) const;
    std::vector<Posterior> posteriors(const StudentId& student, Timestamp now) const;
    std::vector<Recommendation> recommend(const StudentId& student, Timestamp now, double lo = 0.4,
                                          double hi = 0.8) const;

    /// Sequence number of the log entry written under this request key.
    std::optional<std::uint64_t> seq_for_key(const std::string& key) const;

    Store& store() { return *store_; }

   private:
    struct Slot {
        mutable std::mutex mutex;
        StudentRecord record;
        std::uint64_t applied_seq = 0;
    };

    Slot& slot(const StudentId& id) const;
    void remember_key(const std::string& key, std::uint64_t seq);

    std::unique_ptr<Store> store_;
    GraphParams defaults_;
    mutable std::shared_mutex graph_mutex_;
    std::shared_ptr<const Graph> graph_;
    mutable std::shared_mutex students_mutex_;
    std::map<StudentId, std::unique_ptr<Slot>> students_;
    mutable std::mutex keys_mutex_;
    std::map<std::string, std::uint64_t> keys_;
};

}  // namespace pdt
