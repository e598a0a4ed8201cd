#include "odr/detection.hpp"

#include "odr/error.hpp"
#include "odr/prompting.hpp"
#include "odr/provider.hpp"
#include "odr/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

namespace odr {

Lexicon::Lexicon(std::vector<LexiconEntry> entries)
{
    std::set<std::pair<std::u32string, MatchMode>> seen;
    for (auto& e : entries) {
        auto pattern = text::trim(e.pattern);
        if (pattern.empty()) {
            throw Error(ErrorCode::InvalidArgument, "lexicon patterns must not be empty");
        }
        auto folded = text::fold_case(text::decode_utf8(pattern));
        if (!seen.emplace(folded, e.mode).second) {
            continue;
        }
        lengths_.push_back(folded.size());
        entries_.push_back({std::move(pattern), e.mode});
    }
    compile();
}

void Lexicon::compile()
{
    nodes_.assign(1, Node{});
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        auto folded = text::fold_case(text::decode_utf8(entries_[i].pattern));
        std::size_t cur = 0;
        for (char32_t c : folded) {
            auto it = nodes_[cur].next.find(c);
            if (it == nodes_[cur].next.end()) {
                nodes_.push_back(Node{});
                it = nodes_[cur].next.emplace(c, nodes_.size() - 1).first;
            }
            cur = it->second;
        }
        nodes_[cur].outputs.push_back(i);
    }

    // Breadth-first failure links; dict_link skips to the nearest proper
    // suffix state that ends a pattern.
    std::queue<std::size_t> q;
    for (auto& [c, child] : nodes_[0].next) {
        nodes_[child].fail = 0;
        q.push(child);
    }
    while (!q.empty()) {
        auto u = q.front();
        q.pop();
        for (auto& [c, v] : nodes_[u].next) {
            std::size_t f = nodes_[u].fail;
            while (f != 0 && !nodes_[f].next.contains(c)) {
                f = nodes_[f].fail;
            }
            auto it = nodes_[f].next.find(c);
            nodes_[v].fail = (it != nodes_[f].next.end() && it->second != v) ? it->second : 0;
            auto fv = nodes_[v].fail;
            nodes_[v].dict_link = !nodes_[fv].outputs.empty() ? fv : nodes_[fv].dict_link;
            q.push(v);
        }
    }
}

std::vector<TermMatch> Lexicon::find_all(std::string_view body) const
{
    std::vector<std::pair<std::size_t, std::size_t>> hits; // (offset, entry)
    if (entries_.empty()) {
        return {};
    }
    const auto raw = text::decode_utf8(body);
    const auto folded = text::fold_case(raw);
    const auto n = folded.size();

    auto boundary_ok = [&](std::size_t start, std::size_t len) {
        bool left = start == 0 || !text::is_alnum(folded[start - 1]);
        bool right = start + len == n || !text::is_alnum(folded[start + len]);
        return left && right;
    };
    auto emit = [&](std::size_t node, std::size_t end) {
        for (auto idx : nodes_[node].outputs) {
            auto len = lengths_[idx];
            auto start = end + 1 - len;
            if (entries_[idx].mode == MatchMode::Substring || boundary_ok(start, len)) {
                hits.emplace_back(start, idx);
            }
        }
    };

    std::size_t state = 0;
    for (std::size_t i = 0; i < n; ++i) {
        char32_t c = folded[i];
        while (state != 0 && !nodes_[state].next.contains(c)) {
            state = nodes_[state].fail;
        }
        if (auto it = nodes_[state].next.find(c); it != nodes_[state].next.end()) {
            state = it->second;
        }
        emit(state, i);
        for (auto d = nodes_[state].dict_link; d != 0; d = nodes_[d].dict_link) {
            emit(d, i);
        }
    }

    std::sort(hits.begin(), hits.end());
    std::vector<TermMatch> out;
    out.reserve(hits.size());
    for (auto& [offset, idx] : hits) {
        out.push_back({entries_[idx].pattern, offset});
    }
    return out;
}

Lexicon Lexicon::parse(std::string_view content)
{
    std::vector<LexiconEntry> entries;
    std::istringstream in{std::string(content)};
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        LexiconEntry entry;
        auto tab = line.rfind('\t');
        if (tab != std::string::npos) {
            auto mode = text::to_lower_ascii(text::trim(std::string_view(line).substr(tab + 1)));
            if (mode == "substring") {
                entry.mode = MatchMode::Substring;
            } else if (mode == "word") {
                entry.mode = MatchMode::WordBoundary;
            } else {
                throw Error(ErrorCode::LexiconParseError,
                            "line " + std::to_string(lineno) + ": unknown match mode '" + mode + "'",
                            lineno);
            }
            entry.pattern = text::trim(std::string_view(line).substr(0, tab));
        } else {
            entry.pattern = trimmed;
        }
        if (entry.pattern.empty()) {
            throw Error(ErrorCode::LexiconParseError,
                        "line " + std::to_string(lineno) + ": empty pattern", lineno);
        }
        entries.push_back(std::move(entry));
    }
    return Lexicon(std::move(entries));
}

Lexicon Lexicon::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::LexiconParseError, "cannot open lexicon " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

DetectionResult scan_keywords(std::string_view body, const Lexicon& lexicon)
{
    DetectionResult r;
    r.strategy = DetectionStrategy::KeywordScan;
    r.matched_terms = lexicon.find_all(body);
    r.flagged = !r.matched_terms.empty();
    return r;
}

DetectionResult manual_request()
{
    DetectionResult r;
    r.strategy = DetectionStrategy::ManualRequest;
    r.flagged = true;
    return r;
}

DetectionResult classify_with_llm(std::string_view body, ChatProvider& provider)
{
    auto completion = provider.complete(build_classifier_prompt(body));
    auto answer = text::to_lower_ascii(text::trim(completion.text));

    DetectionResult r;
    r.strategy = DetectionStrategy::LlmClassifier;
    if (answer == "yes") {
        r.flagged = true;
    } else if (answer == "no") {
        r.flagged = false;
    } else {
        r.flagged = false;
        r.note = std::string(to_string(ErrorCode::UnparseableAnswer)) + ": '" +
                 completion.text.substr(0, 80) + "'";
        spdlog::warn("classifier answer is neither YES nor NO, treating as not flagged: '{}'",
                     completion.text.substr(0, 80));
    }
    return r;
}

} // namespace odr
