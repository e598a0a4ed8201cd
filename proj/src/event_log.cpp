#include "odr/event_log.hpp"

#include "odr/error.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sys/stat.h>
#include <unistd.h>

namespace odr {

namespace {

constexpr std::array kEventKinds{EventKind::DisputeCreated,    EventKind::MediatorAttached,
                                 EventKind::MessageAppended,   EventKind::SuggestionCreated,
                                 EventKind::SuggestionResolved, EventKind::TriggerFired,
                                 EventKind::StatusChanged};

} // namespace

std::string_view to_string(EventKind k) noexcept
{
    switch (k) {
    case EventKind::DisputeCreated: return "DisputeCreated";
    case EventKind::MediatorAttached: return "MediatorAttached";
    case EventKind::MessageAppended: return "MessageAppended";
    case EventKind::SuggestionCreated: return "SuggestionCreated";
    case EventKind::SuggestionResolved: return "SuggestionResolved";
    case EventKind::TriggerFired: return "TriggerFired";
    case EventKind::StatusChanged: return "StatusChanged";
    }
    return "?";
}

EventKind event_kind_from_string(std::string_view s)
{
    for (auto k : kEventKinds) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown event kind: " + std::string(s));
}

std::string encode_record(const EventRecord& r)
{
    std::string line = "{\"event_seq\":";
    line += std::to_string(r.event_seq);
    line += ",\"dispute_id\":";
    line += json(r.dispute_id.str()).dump();
    line += ",\"kind\":\"";
    line += to_string(r.kind);
    line += "\",\"recorded_at\":\"";
    line += format_timestamp(r.recorded_at);
    line += "\",\"payload\":";
    line += r.payload.dump();
    line += '}';
    return line;
}

EventRecord decode_record(std::string_view line)
{
    auto j = json::parse(line);
    EventRecord r;
    r.event_seq = j.at("event_seq").get<std::uint64_t>();
    r.dispute_id = DisputeId(j.at("dispute_id").get<std::string>());
    r.kind = event_kind_from_string(j.at("kind").get<std::string>());
    r.recorded_at = parse_timestamp(j.at("recorded_at").get<std::string>());
    r.payload = j.at("payload");
    return r;
}

LogScan scan_log(std::istream& in)
{
    LogScan scan;
    std::string line;
    std::uint64_t offset = 0;
    while (true) {
        line.clear();
        if (!std::getline(in, line)) {
            break;
        }
        bool has_newline = !in.eof();
        auto line_bytes = line.size() + (has_newline ? 1 : 0);
        if (!has_newline) {
            // A record is only complete once its newline is on disk.
            scan.corrupt_at = offset;
            break;
        }
        try {
            auto rec = decode_record(line);
            if (rec.event_seq != scan.records.size() + 1) {
                scan.corrupt_at = offset;
                break;
            }
            scan.records.push_back(std::move(rec));
        } catch (const std::exception&) {
            scan.corrupt_at = offset;
            break;
        }
        offset += line_bytes;
        scan.valid_bytes = offset;
    }
    return scan;
}

void apply_event(std::optional<Dispute>& state, const EventRecord& r)
{
    if (r.kind == EventKind::DisputeCreated) {
        if (state) {
            throw Error(ErrorCode::CorruptLog, "dispute " + r.dispute_id.str() + " created twice",
                        static_cast<std::int64_t>(r.event_seq));
        }
        state = r.payload.get<Dispute>();
        return;
    }
    if (!state) {
        throw Error(ErrorCode::CorruptLog, "event before DisputeCreated for " + r.dispute_id.str(),
                    static_cast<std::int64_t>(r.event_seq));
    }
    Dispute& d = *state;
    switch (r.kind) {
    case EventKind::DisputeCreated:
        break;
    case EventKind::MediatorAttached:
        d.participants.push_back(r.payload.get<Participant>());
        break;
    case EventKind::MessageAppended:
        d.messages.push_back(r.payload.get<Message>());
        break;
    case EventKind::SuggestionCreated:
        d.suggestions.push_back(r.payload.get<Suggestion>());
        break;
    case EventKind::SuggestionResolved: {
        auto s = r.payload.get<Suggestion>();
        Suggestion* existing = d.find_suggestion(s.id);
        if (existing == nullptr) {
            throw Error(ErrorCode::CorruptLog, "resolution of unknown suggestion " + s.id.str(),
                        static_cast<std::int64_t>(r.event_seq));
        }
        *existing = std::move(s);
        break;
    }
    case EventKind::TriggerFired:
        d.triggers.push_back(r.payload.get<TriggerEvent>());
        break;
    case EventKind::StatusChanged:
        d.status = r.payload.at("status").get<DisputeStatus>();
        break;
    }
}

Dispute fold_events(std::span<const EventRecord> records, const DisputeId& id)
{
    std::optional<Dispute> state;
    for (const auto& r : records) {
        if (r.dispute_id == id) apply_event(state, r);
    }
    if (!state) {
        throw Error(ErrorCode::UnknownDispute, "no such dispute: " + id.str());
    }
    return std::move(*state);
}

Dispute replay_file(const std::filesystem::path& path, const DisputeId& id)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::StorageError, "cannot open log " + path.string());
    }
    auto scan = scan_log(in);
    if (scan.corrupt_at) {
        throw Error(ErrorCode::CorruptLog,
                    "corrupt record at byte " + std::to_string(*scan.corrupt_at) + " of " +
                        path.string(),
                    static_cast<std::int64_t>(*scan.corrupt_at));
    }
    return fold_events(scan.records, id);
}

// ---------------------------------------------------------------------------

EventLog::EventLog() = default;

EventLog::EventLog(std::filesystem::path path, EventLogOptions options)
    : path_(std::move(path)), options_(options)
{
    if (std::filesystem::exists(*path_)) {
        std::ifstream in(*path_, std::ios::binary);
        auto scan = scan_log(in);
        if (scan.corrupt_at) {
            if (!options_.truncate_corrupt_tail) {
                throw Error(ErrorCode::CorruptLog,
                            "corrupt record at byte " + std::to_string(*scan.corrupt_at) + " of " +
                                path_->string(),
                            static_cast<std::int64_t>(*scan.corrupt_at));
            }
            spdlog::warn("truncating corrupt log tail of {} at byte {}", path_->string(),
                         scan.valid_bytes);
            std::filesystem::resize_file(*path_, scan.valid_bytes);
        }
        records_ = std::move(scan.records);
        file_size_ = scan.valid_bytes;
        for (std::size_t i = 0; i < records_.size(); ++i) {
            index_[records_[i].dispute_id].push_back(i);
        }
    }
    fd_ = ::open(path_->c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) {
        throw Error(ErrorCode::StorageError,
                    "cannot open log " + path_->string() + ": " + std::strerror(errno));
    }
}

EventLog::~EventLog()
{
    if (fd_ >= 0) ::close(fd_);
}

void EventLog::write_bytes(const std::string& bytes)
{
    if (fd_ < 0) return;
    std::size_t written = 0;
    while (written < bytes.size()) {
        auto n = ::write(fd_, bytes.data() + written, bytes.size() - written);
        if (n < 0) {
            if (errno == EINTR) continue;
            int err = errno;
            // Roll back the partial write so the file ends on a record boundary.
            if (::ftruncate(fd_, static_cast<off_t>(file_size_)) != 0) {
                spdlog::error("could not roll back partial log write: {}", std::strerror(errno));
            }
            auto code = (err == ENOSPC || err == EDQUOT) ? ErrorCode::StorageFull
                                                          : ErrorCode::StorageError;
            throw Error(code, std::string("log write failed: ") + std::strerror(err));
        }
        written += static_cast<std::size_t>(n);
    }
    if (options_.fsync && ::fdatasync(fd_) != 0) {
        throw Error(ErrorCode::StorageError, std::string("fdatasync failed: ") + std::strerror(errno));
    }
    file_size_ += bytes.size();
}

std::uint64_t EventLog::append_event(NewEvent event)
{
    std::vector<NewEvent> one;
    one.push_back(std::move(event));
    return append_batch(std::move(one)).front().event_seq;
}

std::vector<EventRecord> EventLog::append_batch(std::vector<NewEvent> events)
{
    std::lock_guard lock(mutex_);
    std::vector<EventRecord> staged;
    std::string bytes;
    auto seq = static_cast<std::uint64_t>(records_.size());
    for (auto& e : events) {
        EventRecord r{++seq, std::move(e.dispute_id), e.kind, e.recorded_at, std::move(e.payload)};
        try {
            bytes += encode_record(r);
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::SerializationError,
                        std::string("cannot serialize event payload: ") + ex.what());
        }
        bytes += '\n';
        staged.push_back(std::move(r));
    }
    write_bytes(bytes);

    for (const auto& r : staged) {
        index_[r.dispute_id].push_back(records_.size());
        records_.push_back(r);
    }
    return staged;
}

std::vector<EventRecord> EventLog::events_for(const DisputeId& id, std::uint64_t since) const
{
    std::lock_guard lock(mutex_);
    std::vector<EventRecord> out;
    auto it = index_.find(id);
    if (it == index_.end()) return out;
    // event_seq == index + 1, and the per-dispute index is ascending.
    auto first = std::upper_bound(it->second.begin(), it->second.end(), since,
                                  [](std::uint64_t s, std::size_t idx) { return s < idx + 1; });
    for (; first != it->second.end(); ++first) {
        out.push_back(records_[*first]);
    }
    return out;
}

std::vector<EventRecord> EventLog::all() const
{
    std::lock_guard lock(mutex_);
    return records_;
}

std::vector<DisputeId> EventLog::disputes() const
{
    std::lock_guard lock(mutex_);
    std::vector<DisputeId> out;
    for (const auto& r : records_) {
        if (r.kind == EventKind::DisputeCreated) out.push_back(r.dispute_id);
    }
    return out;
}

std::uint64_t EventLog::last_seq() const
{
    std::lock_guard lock(mutex_);
    return records_.size();
}

Dispute EventLog::replay(const DisputeId& id) const
{
    auto events = events_for(id, 0);
    if (events.empty()) {
        throw Error(ErrorCode::UnknownDispute, "no such dispute: " + id.str());
    }
    return fold_events(events, id);
}

} // namespace odr
