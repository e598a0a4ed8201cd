#include "odr/triggers.hpp"

#include <algorithm>
#include <string>

namespace odr {

namespace {

std::string duration_text(milliseconds d)
{
    return std::to_string(d.count() / 1000) + "s";
}

} // namespace

std::vector<TriggerEvent> evaluate_triggers(const Dispute& dispute, Timestamp now,
                                            const HeatDetector& detector)
{
    std::vector<TriggerEvent> out;
    if (!dispute.open() || dispute.messages.empty()) {
        return out;
    }
    const auto& policy = dispute.policy;
    const auto& msgs = dispute.messages;
    auto fire = [&](TriggerKind kind, std::string cause) {
        out.push_back({kind, dispute.id, now, std::move(cause)});
    };

    if (policy.inactivity.enabled) {
        const auto& last = msgs.back();
        auto idle = now - last.sent_at;
        if (!last.ai_generated() && idle >= policy.inactivity.threshold) {
            fire(TriggerKind::Inactivity, "no messages for " + duration_text(idle) +
                                              " (threshold " +
                                              duration_text(policy.inactivity.threshold) + ")");
        }
    }

    if (policy.every_n.enabled && policy.every_n.n >= 1) {
        const std::uint64_t n = policy.every_n.n;
        std::uint64_t human = 0;
        std::uint64_t window_start_seq = 0; // seq of the first human message of the window
        for (const auto& m : msgs) {
            if (m.ai_generated()) continue;
            ++human;
            if (human % n == 1 || n == 1) window_start_seq = m.seq;
        }
        if (human > 0 && human % n == 0) {
            bool ai_in_window = std::any_of(msgs.begin(), msgs.end(), [&](const Message& m) {
                return m.ai_generated() && m.seq > window_start_seq;
            });
            if (!ai_in_window) {
                fire(TriggerKind::EveryN, std::to_string(human) + " messages sent (every " +
                                              std::to_string(n) + ")");
            }
        }
    }

    if (policy.heated.enabled && detector) {
        auto last_party = std::find_if(msgs.rbegin(), msgs.rend(),
                                       [](const Message& m) { return is_party(m.author_role); });
        if (last_party != msgs.rend()) {
            bool answered = std::any_of(msgs.rbegin(), last_party,
                                        [](const Message& m) { return m.ai_generated(); });
            if (!answered && detector(last_party->body, policy.heated.detector)) {
                fire(TriggerKind::Heated, "message " + last_party->id.str() + " flagged by " +
                                              std::string(to_string(policy.heated.detector)));
            }
        }
    }
    return out;
}

} // namespace odr
