#include "pdt/store.hpp"

#include <json.hpp>
#include <zlib.h>

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace pdt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::uint32_t checksum(std::string_view payload) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(payload.data()), static_cast<uInt>(payload.size())));
}

const char* outcome_name(Outcome o) { return o == Outcome::Success ? "success" : "failure"; }

Outcome parse_outcome(const std::string& s) {
    if (s == "success") return Outcome::Success;
    if (s == "failure") return Outcome::Failure;
    throw Error("unknown outcome '" + s + "'");
}

void sync_file(std::FILE* f) {
    std::fflush(f);
    ::fsync(::fileno(f));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string frame_record(std::string_view payload) {
    char crc[9];
    std::snprintf(crc, sizeof crc, "%08x", checksum(payload));
    std::string out(crc);
    out += ' ';
    out += payload;
    out += '\n';
    return out;
}

std::string unframe_record(std::string_view line, const std::string& file, std::uint64_t offset) {
    if (line.size() < 10 || line[8] != ' ') throw CorruptRecord(file, offset, "bad framing");
    std::uint32_t expected = 0;
    for (char ch : line.substr(0, 8)) {
        int digit;
        if (ch >= '0' && ch <= '9')
            digit = ch - '0';
        else if (ch >= 'a' && ch <= 'f')
            digit = ch - 'a' + 10;
        else
            throw CorruptRecord(file, offset, "bad checksum field");
        expected = expected * 16 + static_cast<std::uint32_t>(digit);
    }
    const std::string_view payload = line.substr(9);
    if (checksum(payload) != expected) throw CorruptRecord(file, offset, "checksum mismatch");
    return std::string(payload);
}

std::string encode_entry(const LogEntry& e) {
    json j = {{"seq", e.seq}, {"student", e.obs.student}};
    if (e.kind == LogEntry::Kind::Student) {
        j["type"] = "student";
    } else {
        j["type"] = "observation";
        j["exercise"] = e.obs.exercise;
        j["outcome"] = outcome_name(e.obs.outcome);
        j["at"] = e.obs.at;
    }
    if (!e.request_key.empty()) j["key"] = e.request_key;
    return j.dump();
}

LogEntry decode_entry(std::string_view payload) {
    const json j = json::parse(payload);
    LogEntry e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.obs.student = j.at("student").get<std::string>();
    const auto type = j.at("type").get<std::string>();
    if (type == "student") {
        e.kind = LogEntry::Kind::Student;
    } else if (type == "observation") {
        e.kind = LogEntry::Kind::Observation;
        e.obs.exercise = j.at("exercise").get<std::string>();
        e.obs.outcome = parse_outcome(j.at("outcome").get<std::string>());
        e.obs.at = j.at("at").get<Timestamp>();
    } else {
        throw Error("unknown log entry type '" + type + "'");
    }
    e.request_key = j.value("key", "");
    return e;
}

std::string encode_snapshot(const StudentId& student, const Snapshot& s) {
    json skills = json::object();
    for (const auto& [id, state] : s.record.skills) {
        skills[id] = {{"coeffs", std::vector<double>(state.coeffs.data(), state.coeffs.data() + state.coeffs.size())},
                      {"practice_count", state.practice_count},
                      {"last_practiced", state.last_practiced}};
    }
    json j = {{"version", 1}, {"student", student}, {"applied_seq", s.applied_seq}, {"skills", skills}};
    j["last_at"] = s.record.last_at ? json(*s.record.last_at) : json(nullptr);
    return j.dump();
}

Snapshot decode_snapshot(std::string_view payload) {
    const json j = json::parse(payload);
    if (j.value("version", 0) != 1) throw Error("unsupported snapshot version");
    Snapshot s;
    s.applied_seq = j.at("applied_seq").get<std::uint64_t>();
    if (!j.at("last_at").is_null()) s.record.last_at = j.at("last_at").get<Timestamp>();
    for (const auto& [id, js] : j.at("skills").items()) {
        const auto values = js.at("coeffs").get<std::vector<double>>();
        SkillState state;
        state.coeffs = Eigen::Map<const BasisCoefficients>(values.data(), static_cast<Eigen::Index>(values.size()));
        state.practice_count = js.at("practice_count").get<int>();
        state.last_practiced = js.at("last_practiced").get<Timestamp>();
        s.record.skills.emplace(id, std::move(state));
    }
    return s;
}

bool valid_student_id(std::string_view id) {
    if (id.empty() || id.size() > 64 || id.front() == '.') return false;
    for (char ch : id) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '_' || ch == '.' || ch == '-';
        if (!ok) return false;
    }
    return true;
}

ParsedLog parse_log(std::string_view content, const std::string& file) {
    ParsedLog out;
    std::size_t offset = 0;
    while (offset < content.size()) {
        const std::size_t end = content.find('\n', offset);
        if (end == std::string_view::npos) {
            out.torn_tail = true;
            break;
        }
        const std::string payload = unframe_record(content.substr(offset, end - offset), file, offset);
        LogEntry entry;
        try {
            entry = decode_entry(payload);
        } catch (const std::exception& e) {
            throw CorruptRecord(file, offset, e.what());
        }
        if (entry.seq != out.entries.size() + 1) throw CorruptRecord(file, offset, "sequence gap");
        out.entries.push_back(std::move(entry));
        offset = end + 1;
    }
    out.valid_bytes = offset;
    return out;
}

std::unique_ptr<Store> Store::in_memory() { return std::unique_ptr<Store>(new Store()); }

std::unique_ptr<Store> Store::open(const fs::path& dir, StoreOptions options) {
    std::unique_ptr<Store> store(new Store());
    store->dir_ = dir;
    store->options_ = options;
    fs::create_directories(dir / "states");

    const fs::path log_path = dir / "observations.log";
    const std::string name = log_path.string();
    if (fs::exists(log_path)) {
        auto parsed = parse_log(read_file(log_path), name);
        // Torn append: the writer died before the newline reached disk.
        if (parsed.torn_tail) fs::resize_file(log_path, parsed.valid_bytes);
        store->log_ = std::move(parsed.entries);
    }
    store->log_file_ = std::fopen(name.c_str(), "ab");
    if (store->log_file_ == nullptr) throw Error("cannot open " + name + " for appending");
    return store;
}

Store::~Store() {
    if (log_file_ != nullptr) std::fclose(log_file_);
}

std::uint64_t Store::append(LogEntry entry) {
    std::lock_guard lock(mutex_);
    entry.seq = log_.size() + 1;
    if (log_file_ != nullptr) {
        const std::string line = frame_record(encode_entry(entry));
        if (std::fwrite(line.data(), 1, line.size(), log_file_) != line.size())
            throw Error("short write to observation log");
        if (options_.fsync)
            sync_file(log_file_);
        else
            std::fflush(log_file_);
    }
    log_.push_back(std::move(entry));
    return log_.back().seq;
}

std::vector<LogEntry> Store::replay(std::uint64_t from) const {
    std::lock_guard lock(mutex_);
    std::vector<LogEntry> out;
    for (const auto& e : log_)
        if (e.seq >= from) out.push_back(e);
    return out;
}

std::uint64_t Store::last_seq() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

std::optional<Snapshot> Store::load_states(const StudentId& student) const {
    std::string line;
    std::string name = "snapshot of " + student;
    if (dir_) {
        const fs::path path = *dir_ / "states" / (student + ".snap");
        if (!fs::exists(path)) return std::nullopt;
        line = read_file(path);
        name = path.string();
    } else {
        std::lock_guard lock(mutex_);
        const auto it = snapshots_.find(student);
        if (it == snapshots_.end()) return std::nullopt;
        line = it->second;
    }
    if (line.empty() || line.back() != '\n') throw CorruptRecord(name, 0, "truncated snapshot");
    line.pop_back();
    const std::string payload = unframe_record(line, name, 0);
    try {
        return decode_snapshot(payload);
    } catch (const std::exception& e) {
        throw CorruptRecord(name, 0, e.what());
    }
}

void Store::put_states(const StudentId& student, const Snapshot& snapshot) {
    if (!valid_student_id(student)) throw Error("invalid student id '" + student + "'");
    const std::string line = frame_record(encode_snapshot(student, snapshot));
    if (dir_) {
        write_file_atomic(*dir_ / "states" / (student + ".snap"), line);
    } else {
        std::lock_guard lock(mutex_);
        snapshots_[student] = line;
    }
}

std::optional<std::string> Store::load_graph() const {
    if (dir_) {
        const fs::path path = *dir_ / "graph.def";
        if (!fs::exists(path)) return std::nullopt;
        return read_file(path);
    }
    std::lock_guard lock(mutex_);
    return graph_;
}

void Store::put_graph(const std::string& text) {
    if (dir_) {
        write_file_atomic(*dir_ / "graph.def", text);
    } else {
        std::lock_guard lock(mutex_);
        graph_ = text;
    }
}

void Store::write_file_atomic(const fs::path& path, const std::string& content) const {
    fs::path tmp = path;
    tmp += ".tmp";
    std::FILE* f = std::fopen(tmp.string().c_str(), "wb");
    if (f == nullptr) throw Error("cannot write " + tmp.string());
    const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
    if (options_.fsync) sync_file(f);
    std::fclose(f);
    if (!ok) throw Error("short write to " + tmp.string());
    fs::rename(tmp, path);
}

}  // namespace pdt
