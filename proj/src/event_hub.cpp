#include "odr/event_hub.hpp"

#include <algorithm>

namespace odr {

std::optional<EventRecord> EventHub::Subscription::next(milliseconds timeout)
{
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return !queue_.empty() || state_ != State::Open; });
    if (queue_.empty()) return std::nullopt;
    auto rec = std::move(queue_.front());
    queue_.pop_front();
    cursor_ = rec.event_seq;
    return rec;
}

std::vector<EventRecord> EventHub::Subscription::drain()
{
    std::lock_guard lock(mutex_);
    std::vector<EventRecord> out(std::make_move_iterator(queue_.begin()),
                                 std::make_move_iterator(queue_.end()));
    queue_.clear();
    if (!out.empty()) cursor_ = out.back().event_seq;
    return out;
}

EventHub::Subscription::State EventHub::Subscription::state() const
{
    std::lock_guard lock(mutex_);
    return state_;
}

std::uint64_t EventHub::Subscription::cursor() const
{
    std::lock_guard lock(mutex_);
    return cursor_;
}

void EventHub::Subscription::close()
{
    {
        std::lock_guard lock(mutex_);
        if (state_ == State::Open) state_ = State::Closed;
    }
    cv_.notify_all();
}

EventHub::EventHub(std::shared_ptr<const EventLog> log, std::size_t queue_limit)
    : log_(std::move(log)), queue_limit_(std::max<std::size_t>(queue_limit, 1))
{
}

std::shared_ptr<EventHub::Subscription> EventHub::subscribe(const DisputeId& dispute,
                                                            std::uint64_t since)
{
    auto sub = std::make_shared<Subscription>();
    sub->limit_ = queue_limit_;
    sub->cursor_ = since;
    sub->queued_through_ = since;

    std::lock_guard lock(mutex_);
    // The backlog may exceed the live limit; it is bounded by the log itself.
    for (auto& rec : log_->events_for(dispute, since)) {
        sub->queued_through_ = rec.event_seq;
        sub->queue_.push_back(std::move(rec));
    }
    auto& list = subscribers_[dispute];
    std::erase_if(list, [](const auto& w) { return w.expired(); });
    list.push_back(sub);
    return sub;
}

void EventHub::publish(const EventRecord& record)
{
    std::vector<std::shared_ptr<Subscription>> targets;
    {
        std::lock_guard lock(mutex_);
        auto it = subscribers_.find(record.dispute_id);
        if (it == subscribers_.end()) return;
        for (const auto& w : it->second) {
            if (auto s = w.lock()) targets.push_back(std::move(s));
        }
    }
    for (const auto& s : targets) {
        {
            std::lock_guard lock(s->mutex_);
            if (s->state_ != Subscription::State::Open) continue;
            if (record.event_seq <= s->queued_through_) continue;
            if (s->queue_.size() >= s->limit_) {
                s->state_ = Subscription::State::Overflowed;
            } else {
                s->queue_.push_back(record);
                s->queued_through_ = record.event_seq;
            }
        }
        s->cv_.notify_all();
    }
}

void EventHub::close_all()
{
    std::vector<std::shared_ptr<Subscription>> all;
    {
        std::lock_guard lock(mutex_);
        for (auto& [id, list] : subscribers_) {
            for (const auto& w : list) {
                if (auto s = w.lock()) all.push_back(std::move(s));
            }
        }
        subscribers_.clear();
    }
    for (const auto& s : all) s->close();
}

std::size_t EventHub::subscriber_count(const DisputeId& dispute) const
{
    std::lock_guard lock(mutex_);
    auto it = subscribers_.find(dispute);
    if (it == subscribers_.end()) return 0;
    return static_cast<std::size_t>(
        std::count_if(it->second.begin(), it->second.end(), [](const auto& w) { return !w.expired(); }));
}

} // namespace odr
