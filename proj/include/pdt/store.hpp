#pragma once

// Persistence: an append-only observation log plus one state snapshot per
// student. Every record is a single line "<crc32 hex> <json>\n"; see
// the "Store format" section of README.md for the layout.

#include "pdt/tracing.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pdt {

class CorruptRecord : public Error {
   public:
    CorruptRecord(const std::string& file, std::uint64_t offset, const std::string& why)
        : Error(file + ": corrupt record at byte " + std::to_string(offset) + ": " + why),
          offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

   private:
    std::uint64_t offset_;
};

struct LogEntry {
    enum class Kind { Student, Observation };

    std::uint64_t seq = 0;
    Kind kind = Kind::Observation;
    Observation obs;  // only obs.student is meaningful for Kind::Student
    /// Client request key, empty when none was given.
    std::string request_key;

    bool operator==(const LogEntry& o) const {
        return seq == o.seq && kind == o.kind && obs.student == o.obs.student && obs.exercise == o.obs.exercise &&
               obs.outcome == o.obs.outcome && obs.at == o.obs.at && request_key == o.request_key;
    }
};

struct Snapshot {
    /// Sequence number of the last log entry folded into the record.
    std::uint64_t applied_seq = 0;
    StudentRecord record;
};

/// "<8 lowercase hex digits of crc32(payload)> <payload>\n".
std::string frame_record(std::string_view payload);
/// Inverse of frame_record for one line without its newline; throws
/// CorruptRecord naming `file` and `offset`.
std::string unframe_record(std::string_view line, const std::string& file, std::uint64_t offset);

std::string encode_entry(const LogEntry& entry);
LogEntry decode_entry(std::string_view payload);
std::string encode_snapshot(const StudentId& student, const Snapshot& snapshot);
Snapshot decode_snapshot(std::string_view payload);

struct ParsedLog {
    std::vector<LogEntry> entries;
    /// Length of the prefix made of complete records.
    std::size_t valid_bytes = 0;
    /// The content ends in a partial line.
    bool torn_tail = false;
};

/// Parses a whole log file's content without touching the file. Bad
/// checksums, undecodable entries and sequence gaps throw CorruptRecord.
ParsedLog parse_log(std::string_view content, const std::string& file);

/// Student ids double as file names: 1 to 64 of [A-Za-z0-9_.-], not starting with '.'.
bool valid_student_id(std::string_view id);

struct StoreOptions {
    /// fsync the log after each append and snapshots before rename.
    bool fsync = false;
};

class Store {
   public:
    /// Keeps everything in memory, framed exactly as on disk.
    static std::unique_ptr<Store> in_memory();
    /// Opens (creating if needed) a store directory. A torn final log line
    /// left by a crash mid-append is cut off; any other bad record throws.
    static std::unique_ptr<Store> open(const std::filesystem::path& dir, StoreOptions options = {});

    ~Store();
    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    /// Assigns the next sequence number (starting at 1) and appends.
    std::uint64_t append(LogEntry entry);
    /// Entries with seq >= from, in order.
    std::vector<LogEntry> replay(std::uint64_t from = 0) const;
    std::uint64_t last_seq() const;

    std::optional<Snapshot> load_states(const StudentId& student) const;
    void put_states(const StudentId& student, const Snapshot& snapshot);

    std::optional<std::string> load_graph() const;
    void put_graph(const std::string& text);

    const std::optional<std::filesystem::path>& dir() const { return dir_; }

   private:
    Store() = default;
    void write_file_atomic(const std::filesystem::path& path, const std::string& content) const;

    std::optional<std::filesystem::path> dir_;
    StoreOptions options_;
    mutable std::mutex mutex_;
    std::vector<LogEntry> log_;
    std::map<StudentId, std::string> snapshots_;  // framed lines, memory mode only
    std::optional<std::string> graph_;             // memory mode only
    std::FILE* log_file_ = nullptr;
};

}  // namespace pdt
