#pragma once

#include "odr/domain.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace odr {

inline constexpr std::string_view kReformulationPrompt =
    "You are an ODR platform. You are given the chat message of a party. Reformulate the "
    "message to maintain the content, but make it less confrontational and more encouraging "
    "for an amicable settlement. Respond directly with the reformulated message, do not "
    "explain.";

inline constexpr std::string_view kMediatorPrompt =
    "You are a mediator. Your goal is to guide the discussion of two parties towards an "
    "amicable settlement that is acceptable to both parties. Respond to this communication "
    "between the parties. Stick to the role of the mediator - do not complete the dialog of "
    "the parties. Remain neutral, do not take the side of any party.";

inline constexpr std::string_view kClassifierPrompt =
    "You are an ODR platform. Answer YES if the following chat message contains "
    "inflammatory, insulting, or hostile language, otherwise answer NO. Answer with a "
    "single word.";

inline constexpr std::string_view kInstructionsPrefix = "Additional instructions from the mediator: ";

inline constexpr std::size_t kDefaultContextWindow = 10;

enum class TurnRole { System, User, Assistant };

std::string_view to_string(TurnRole) noexcept;

struct ChatTurn {
    TurnRole role = TurnRole::User;
    std::string content;

    friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

enum class PromptPurpose { Reformulation, MediatorDraft, AutonomousIntervention, Classifier };

struct PromptBundle {
    std::vector<ChatTurn> turns;
    PromptPurpose purpose = PromptPurpose::Reformulation;
    /// For mediator bundles, aligned with turns[1..]: context_message_ids[i]
    /// produced turns[i + 1].
    std::vector<MessageId> context_message_ids;

    const ChatTurn& system() const { return turns.front(); }
    /// Content of the last user turn, or nullptr when there is none.
    const std::string* last_user_content() const noexcept;

    /// Throws InvalidArgument unless turns[0] is the only system turn and
    /// every turn has content.
    void validate() const;

    friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

/// A dispute message as rendered into mediator context.
struct ContextMessage {
    MessageId id;
    std::string display_name;
    Role role = Role::PartyA;
    std::string body;
};

std::string_view role_label(Role role) noexcept;
std::string format_context_turn(const ContextMessage& m);

/// Every message of the dispute in seq order, labelled with its author's
/// display name.
std::vector<ContextMessage> context_from(const Dispute& dispute);

PromptBundle build_reformulation_prompt(std::string_view draft_body);

/// Uses the last `window` messages of `history`. Blank instructions count
/// as absent. Throws EmptyContext when there is neither history nor an
/// instruction.
PromptBundle build_mediator_prompt(std::span<const ContextMessage> history,
                                   const std::optional<std::string>& instructions,
                                   std::size_t window = kDefaultContextWindow,
                                   PromptPurpose purpose = PromptPurpose::MediatorDraft);

PromptBundle build_classifier_prompt(std::string_view body);

/// ceil(1.5 * whitespace-separated words)
std::size_t estimate_tokens(std::string_view text);
std::size_t estimate_tokens(const PromptBundle& bundle);

/// Drops the oldest context turns until the estimate fits. The system turn
/// and the newest context turn are never dropped, so the result can still
/// exceed the budget when those two alone do.
PromptBundle estimate_and_trim(PromptBundle bundle, std::size_t max_context_tokens);

} // namespace odr
