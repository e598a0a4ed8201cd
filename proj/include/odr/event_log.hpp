#pragma once

#include "odr/domain.hpp"
#include "odr/serialization.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace odr {

enum class EventKind {
    DisputeCreated,
    MediatorAttached,
    MessageAppended,
    SuggestionCreated,
    SuggestionResolved,
    TriggerFired,
    StatusChanged,
};

std::string_view to_string(EventKind) noexcept;
EventKind event_kind_from_string(std::string_view s);

struct NewEvent {
    DisputeId dispute_id;
    EventKind kind = EventKind::MessageAppended;
    json payload;
    Timestamp recorded_at{};
};

struct EventRecord {
    std::uint64_t event_seq = 0;
    DisputeId dispute_id;
    EventKind kind = EventKind::MessageAppended;
    Timestamp recorded_at{};
    json payload;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// One line of the log file, without trailing newline. Field order is
/// event_seq, dispute_id, kind, recorded_at, payload.
std::string encode_record(const EventRecord& record);
EventRecord decode_record(std::string_view line);

struct LogScan {
    std::vector<EventRecord> records;
    /// Byte offset just past the last intact record.
    std::uint64_t valid_bytes = 0;
    /// Set when trailing bytes could not be decoded.
    std::optional<std::uint64_t> corrupt_at;
};

/// Reads records until the first undecodable line, a missing final
/// newline, or a break in the gapless event_seq sequence.
LogScan scan_log(std::istream& in);

/// Folds one event into the dispute it belongs to. DisputeCreated must come
/// first; payloads are full entities so the fold never recomputes state.
void apply_event(std::optional<Dispute>& state, const EventRecord& record);

/// Throws UnknownDispute if no DisputeCreated event is present.
Dispute fold_events(std::span<const EventRecord> records, const DisputeId& id);

/// Replays a dispute straight from a log file. Throws CorruptLog with the
/// byte offset of the first bad record in detail().
Dispute replay_file(const std::filesystem::path& path, const DisputeId& id);

struct EventLogOptions {
    bool fsync = true;
    /// On open, cut a corrupt tail back to the last intact record instead
    /// of failing with CorruptLog.
    bool truncate_corrupt_tail = false;
};

/// Append-only event store: newline-delimited JSON in one file (or memory
/// only when no path is given), with an in-memory per-dispute index.
/// Appends are serialized by an internal mutex.
class EventLog {
public:
    EventLog();
    explicit EventLog(std::filesystem::path path, EventLogOptions options = {});
    ~EventLog();

    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    std::uint64_t append_event(NewEvent event);

    /// All-or-nothing: either every event is durably written or none is
    /// and the file is restored to its previous length. Returns the stored
    /// records.
    std::vector<EventRecord> append_batch(std::vector<NewEvent> events);

    /// Events of one dispute with event_seq > since, in order.
    std::vector<EventRecord> events_for(const DisputeId& id, std::uint64_t since = 0) const;
    std::vector<EventRecord> all() const;
    std::vector<DisputeId> disputes() const;
    std::uint64_t last_seq() const;

    /// Throws UnknownDispute.
    Dispute replay(const DisputeId& id) const;

    const std::optional<std::filesystem::path>& path() const noexcept { return path_; }

private:
    void write_bytes(const std::string& bytes);

    mutable std::mutex mutex_;
    std::optional<std::filesystem::path> path_;
    EventLogOptions options_;
    int fd_ = -1;
    std::uint64_t file_size_ = 0;
    std::vector<EventRecord> records_;
    std::map<DisputeId, std::vector<std::size_t>> index_;
};

} // namespace odr
