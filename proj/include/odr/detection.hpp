#pragma once

#include "odr/domain.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace odr {

class ChatProvider;

enum class MatchMode { WordBoundary, Substring };

struct LexiconEntry {
    std::string pattern;
    MatchMode mode = MatchMode::WordBoundary;

    friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

struct TermMatch {
    std::string pattern;
    std::size_t offset = 0; // code points from the start of the body

    friend bool operator==(const TermMatch&, const TermMatch&) = default;
};

struct DetectionResult {
    bool flagged = false;
    std::vector<TermMatch> matched_terms;
    DetectionStrategy strategy = DetectionStrategy::KeywordScan;
    /// Diagnostic for non-fatal oddities, e.g. an unparseable classifier answer.
    std::optional<std::string> note;
};

/// A set of inflammatory-term patterns compiled into an Aho-Corasick
/// automaton over case-folded code points. '*' is an ordinary character so
/// masked profanity ("a**hole", "****") matches literally.
///
/// Entries are deduplicated on (folded pattern, mode); the first spelling
/// wins and is what matches report.
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::vector<LexiconEntry> entries);

    /// Plain-text format: one pattern per line, '#' starts a comment line,
    /// a trailing "\tsubstring" (or "\tword") selects the match mode.
    static Lexicon parse(std::string_view text);
    static Lexicon load(const std::filesystem::path& path);

    const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

    /// Every match, ordered by offset then entry order.
    std::vector<TermMatch> find_all(std::string_view body) const;

private:
    struct Node {
        std::map<char32_t, std::size_t> next;
        std::size_t fail = 0;
        std::vector<std::size_t> outputs; // entry indices ending here
        std::size_t dict_link = 0;        // nearest suffix node with outputs, 0 = none
    };

    void compile();

    std::vector<LexiconEntry> entries_;
    std::vector<std::size_t> lengths_; // code points per entry
    std::vector<Node> nodes_;
};

DetectionResult scan_keywords(std::string_view body, const Lexicon& lexicon);

/// Result for an explicit user request; always flagged.
DetectionResult manual_request();

/// Asks the provider for a single-word YES/NO verdict. Provider errors
/// propagate; any other answer yields flagged=false with a note and a
/// warning in the log.
DetectionResult classify_with_llm(std::string_view body, ChatProvider& provider);

} // namespace odr
