#include "odr/prompting.hpp"

#include "odr/error.hpp"
#include "odr/text.hpp"

#include <algorithm>

namespace odr {

std::string_view to_string(TurnRole r) noexcept
{
    switch (r) {
    case TurnRole::System: return "system";
    case TurnRole::User: return "user";
    case TurnRole::Assistant: return "assistant";
    }
    return "?";
}

const std::string* PromptBundle::last_user_content() const noexcept
{
    for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
        if (it->role == TurnRole::User) return &it->content;
    }
    return nullptr;
}

void PromptBundle::validate() const
{
    if (turns.empty() || turns.front().role != TurnRole::System) {
        throw Error(ErrorCode::InvalidArgument, "prompt must start with a system turn");
    }
    auto systems = std::count_if(turns.begin(), turns.end(),
                                 [](const ChatTurn& t) { return t.role == TurnRole::System; });
    if (systems != 1) {
        throw Error(ErrorCode::InvalidArgument, "prompt must contain exactly one system turn");
    }
    for (const auto& t : turns) {
        if (t.content.empty()) {
            throw Error(ErrorCode::InvalidArgument, "prompt turns must not be empty");
        }
    }
}

std::string_view role_label(Role role) noexcept
{
    switch (role) {
    case Role::PartyA:
    case Role::PartyB: return "party";
    case Role::Mediator: return "mediator";
    case Role::AiMediator: return "AI mediator";
    case Role::System: return "system";
    }
    return "?";
}

std::string format_context_turn(const ContextMessage& m)
{
    std::string out = m.display_name;
    out += " (";
    out += role_label(m.role);
    out += "): ";
    out += m.body;
    return out;
}

std::vector<ContextMessage> context_from(const Dispute& dispute)
{
    std::vector<ContextMessage> out;
    out.reserve(dispute.messages.size());
    for (const auto& m : dispute.messages) {
        const Participant* p = dispute.find_participant(m.author);
        out.push_back({m.id, p ? p->display_name : m.author.str(), m.author_role, m.body});
    }
    return out;
}

PromptBundle build_reformulation_prompt(std::string_view draft_body)
{
    if (text::is_blank(draft_body)) {
        throw Error(ErrorCode::EmptyDraft, "draft message is empty");
    }
    PromptBundle b;
    b.purpose = PromptPurpose::Reformulation;
    b.turns.push_back({TurnRole::System, std::string(kReformulationPrompt)});
    b.turns.push_back({TurnRole::User, std::string(draft_body)});
    return b;
}

PromptBundle build_mediator_prompt(std::span<const ContextMessage> history,
                                   const std::optional<std::string>& instructions,
                                   std::size_t window, PromptPurpose purpose)
{
    if (window == 0) {
        throw Error(ErrorCode::InvalidArgument, "context window must be positive");
    }
    const bool has_instructions = instructions && !text::is_blank(*instructions);
    if (history.empty() && !has_instructions) {
        throw Error(ErrorCode::EmptyContext, "no messages and no instructions to mediate");
    }

    PromptBundle b;
    b.purpose = purpose;
    std::string system(kMediatorPrompt);
    if (has_instructions) {
        system += "\n\n";
        system += kInstructionsPrefix;
        system += *instructions;
    }
    b.turns.push_back({TurnRole::System, std::move(system)});

    auto take = std::min(window, history.size());
    for (const auto& m : history.subspan(history.size() - take)) {
        b.turns.push_back({TurnRole::User, format_context_turn(m)});
        b.context_message_ids.push_back(m.id);
    }
    return b;
}

PromptBundle build_classifier_prompt(std::string_view body)
{
    if (text::is_blank(body)) {
        throw Error(ErrorCode::EmptyDraft, "message is empty");
    }
    PromptBundle b;
    b.purpose = PromptPurpose::Classifier;
    b.turns.push_back({TurnRole::System, std::string(kClassifierPrompt)});
    b.turns.push_back({TurnRole::User, std::string(body)});
    return b;
}

std::size_t estimate_tokens(std::string_view s)
{
    auto words = text::count_words(s);
    return (words * 3 + 1) / 2;
}

std::size_t estimate_tokens(const PromptBundle& bundle)
{
    std::size_t words = 0;
    for (const auto& t : bundle.turns) {
        words += text::count_words(t.content);
    }
    return (words * 3 + 1) / 2;
}

PromptBundle estimate_and_trim(PromptBundle bundle, std::size_t max_context_tokens)
{
    if (bundle.turns.empty()) {
        throw Error(ErrorCode::InvalidArgument, "empty prompt");
    }
    if (estimate_tokens(bundle.system().content) > max_context_tokens) {
        throw Error(ErrorCode::SystemPromptTooLarge,
                    "system prompt alone exceeds the context budget of " +
                        std::to_string(max_context_tokens) + " tokens");
    }

    std::vector<std::size_t> words;
    std::size_t total = 0;
    for (const auto& t : bundle.turns) {
        words.push_back(text::count_words(t.content));
        total += words.back();
    }
    auto estimate = [](std::size_t w) { return (w * 3 + 1) / 2; };

    // Oldest context turn sits at index 1; keep at least the newest.
    std::size_t drop = 0;
    while (estimate(total) > max_context_tokens && bundle.turns.size() - drop > 2) {
        total -= words[1 + drop];
        ++drop;
    }
    if (drop > 0) {
        bundle.turns.erase(bundle.turns.begin() + 1, bundle.turns.begin() + 1 + drop);
        if (!bundle.context_message_ids.empty()) {
            auto n = std::min(drop, bundle.context_message_ids.size());
            bundle.context_message_ids.erase(bundle.context_message_ids.begin(),
                                             bundle.context_message_ids.begin() + n);
        }
    }
    return bundle;
}

} // namespace odr
