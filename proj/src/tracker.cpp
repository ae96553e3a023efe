#include "pdt/tracker.hpp"

namespace pdt {

std::map<StudentId, StudentRecord> replay_log(const Graph& graph, const std::vector<LogEntry>& log) {
    std::map<StudentId, StudentRecord> out;
    for (const auto& entry : log) {
        if (entry.kind == LogEntry::Kind::Student) {
            out.try_emplace(entry.obs.student);
            continue;
        }
        const auto it = out.find(entry.obs.student);
        if (it == out.end()) throw UnknownStudent(entry.obs.student);
        apply_observation(graph, it->second, entry.obs);
    }
    return out;
}

Tracker::Tracker(std::unique_ptr<Store> store, GraphParams defaults)
    : store_(std::move(store)), defaults_(defaults) {
    auto empty = std::make_shared<Graph>();
    empty->params = defaults_;
    graph_ = empty;
    if (const auto text = store_->load_graph()) {
        auto loaded = load_graph(*text, defaults_);
        if (!loaded.report.ok())
            throw InvalidGraph("stored graph definition is invalid: " + loaded.report.errors.front().message);
        graph_ = std::make_shared<const Graph>(std::move(loaded.graph));
    }

    std::map<StudentId, bool> dirty;
    for (const auto& entry : store_->replay(0)) {
        if (!entry.request_key.empty()) keys_[entry.request_key] = entry.seq;
        if (entry.kind == LogEntry::Kind::Student) {
            auto& s = students_[entry.obs.student];
            if (s) continue;
            s = std::make_unique<Slot>();
            if (auto snap = store_->load_states(entry.obs.student)) {
                s->record = std::move(snap->record);
                s->applied_seq = snap->applied_seq;
            }
            s->applied_seq = std::max(s->applied_seq, entry.seq);
            continue;
        }
        const auto it = students_.find(entry.obs.student);
        if (it == students_.end()) throw UnknownStudent(entry.obs.student);
        Slot& s = *it->second;
        if (entry.seq <= s.applied_seq) continue;
        try {
            apply_observation(*graph_, s.record, entry.obs);
        } catch (const Error& e) {
            throw Error("recovery failed at log entry " + std::to_string(entry.seq) + ": " + e.what());
        }
        s.applied_seq = entry.seq;
        dirty[entry.obs.student] = true;
    }
    for (const auto& [id, _] : dirty) {
        const Slot& s = *students_.at(id);
        store_->put_states(id, {s.applied_seq, s.record});
    }
}

std::shared_ptr<const Graph> Tracker::graph() const {
    std::shared_lock lock(graph_mutex_);
    return graph_;
}

GraphLoad Tracker::set_graph(std::string_view text) {
    auto loaded = load_graph(text, defaults_);
    if (!loaded.report.ok()) return loaded;
    std::unique_lock lock(graph_mutex_);
    store_->put_graph(std::string(text));
    graph_ = std::make_shared<const Graph>(loaded.graph);
    return loaded;
}

bool Tracker::create_student(const StudentId& id, const std::string& request_key) {
    if (!valid_student_id(id)) throw Error("invalid student id '" + id + "'");
    std::unique_lock lock(students_mutex_);
    if (students_.contains(id)) return false;
    LogEntry entry;
    entry.kind = LogEntry::Kind::Student;
    entry.obs.student = id;
    entry.request_key = request_key;
    const auto seq = store_->append(entry);
    auto s = std::make_unique<Slot>();
    s->applied_seq = seq;
    store_->put_states(id, {seq, s->record});
    students_.emplace(id, std::move(s));
    remember_key(request_key, seq);
    return true;
}

bool Tracker::has_student(const StudentId& id) const {
    std::shared_lock lock(students_mutex_);
    return students_.contains(id);
}

std::vector<StudentId> Tracker::students() const {
    std::shared_lock lock(students_mutex_);
    std::vector<StudentId> out;
    for (const auto& [id, _] : students_) out.push_back(id);
    return out;
}

Tracker::Slot& Tracker::slot(const StudentId& id) const {
    std::shared_lock lock(students_mutex_);
    const auto it = students_.find(id);
    if (it == students_.end()) throw UnknownStudent(id);
    return *it->second;
}

StudentRecord Tracker::record_of(const StudentId& id) const {
    const Slot& s = slot(id);
    std::lock_guard lock(s.mutex);
    return s.record;
}

RecordResult Tracker::record(const Observation& obs, bool dry_run, const std::string& request_key) {
    const auto g = graph();
    Slot& s = slot(obs.student);
    std::lock_guard lock(s.mutex);

    StudentRecord next = s.record;
    RecordResult result;
    result.dry_run = dry_run;
    result.updated = apply_observation(*g, next, obs);
    for (const auto& skill : result.updated) result.posteriors.push_back(pdt::posterior(*g, next, skill, obs.at));
    if (dry_run) return result;

    LogEntry entry;
    entry.obs = obs;
    entry.request_key = request_key;
    result.seq = store_->append(entry);
    store_->put_states(obs.student, {result.seq, next});
    s.record = std::move(next);
    s.applied_seq = result.seq;
    remember_key(request_key, result.seq);
    return result;
}

Posterior Tracker::posterior(const StudentId& student, const SkillId& skill, Timestamp now) const {
    const auto g = graph();
    return pdt::posterior(*g, record_of(student), skill, now);
}

std::vector<Posterior> Tracker::posteriors(const StudentId& student, Timestamp now) const {
    const auto g = graph();
    const auto rec = record_of(student);
    std::vector<Posterior> out;
    for (const auto& skill : g->skills()) out.push_back(pdt::posterior(*g, rec, skill.id, now));
    return out;
}

std::vector<Recommendation> Tracker::recommend(const StudentId& student, Timestamp now, double lo,
                                               double hi) const {
    const auto g = graph();
    return pdt::recommend(*g, record_of(student), now, lo, hi);
}

std::optional<std::uint64_t> Tracker::seq_for_key(const std::string& key) const {
    std::lock_guard lock(keys_mutex_);
    const auto it = keys_.find(key);
    if (it == keys_.end()) return std::nullopt;
    return it->second;
}

void Tracker::remember_key(const std::string& key, std::uint64_t seq) {
    if (key.empty()) return;
    std::lock_guard lock(keys_mutex_);
    keys_[key] = seq;
}

}  // namespace pdt
