#pragma once

#include "odr/domain.hpp"

#include <functional>
#include <string_view>
#include <vector>

namespace odr {

/// Per-message heat verdict for the heated trigger; returns false when the
/// strategy is not enabled.
using HeatDetector = std::function<bool(std::string_view body, DetectionStrategy strategy)>;

/// Polled triggers currently firing for the dispute, in the order
/// Inactivity, EveryN, Heated. PartyRequest is event-driven and never
/// returned. Closed disputes never fire.
///
/// Inactivity: now - last sent_at >= threshold and the last message is not
/// AI-authored.
/// EveryN: the number of human messages is a positive multiple of n and no
/// AI message follows the first human message of that n-window.
/// Heated: the most recent party message is flagged and no AI message
/// follows it.
std::vector<TriggerEvent> evaluate_triggers(const Dispute& dispute, Timestamp now,
                                            const HeatDetector& detector);

} // namespace odr
