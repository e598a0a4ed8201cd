#pragma once

#include "odr/event_log.hpp"

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

namespace odr {

/// Fan-out of dispute events to live subscribers.
///
/// subscribe() snapshots the backlog from the log and registers the
/// subscriber under one lock, and publish() skips anything a subscriber has
/// already seen, so a subscriber observes every event after its cursor
/// exactly once and in event_seq order.
class EventHub {
public:
    class Subscription {
    public:
        enum class State { Open, Overflowed, Closed };

        /// Waits up to `timeout` for the next event.
        std::optional<EventRecord> next(milliseconds timeout);
        /// Everything queued right now, without waiting.
        std::vector<EventRecord> drain();

        State state() const;
        /// event_seq of the last event handed to the consumer; the resume
        /// cursor after a disconnect.
        std::uint64_t cursor() const;
        void close();

    private:
        friend class EventHub;

        mutable std::mutex mutex_;
        std::condition_variable cv_;
        std::deque<EventRecord> queue_;
        std::uint64_t queued_through_ = 0;
        std::uint64_t cursor_ = 0;
        std::size_t limit_ = 0;
        State state_ = State::Open;
    };

    EventHub(std::shared_ptr<const EventLog> log, std::size_t queue_limit = 1024);

    std::shared_ptr<Subscription> subscribe(const DisputeId& dispute, std::uint64_t since);
    void publish(const EventRecord& record);
    /// Closes every subscription (server shutdown).
    void close_all();
    std::size_t subscriber_count(const DisputeId& dispute) const;

private:
    std::shared_ptr<const EventLog> log_;
    std::size_t queue_limit_;
    mutable std::mutex mutex_;
    std::unordered_map<DisputeId, std::vector<std::weak_ptr<Subscription>>> subscribers_;
};

} // namespace odr
