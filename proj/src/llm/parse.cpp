#include "stratagem/llm.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace stratagem::llm {

using insight::Direction;
using insight::Insight;

namespace {

struct Line {
    std::size_t indent = 0;
    bool blank = false;
    bool item = false;        // bullet, number or bold label
    std::string text;         // without list marker, markup removed
    std::string raw;          // trimmed original
};

std::string strip_markup(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '`') continue;
        if ((c == '*' || c == '_') && i + 1 < text.size() && text[i + 1] == c) {
            ++i;
            continue;
        }
        out.push_back(c);
    }
    // Italic wrappers around a whole item.
    std::string_view view = detail::trim(out);
    while (view.size() >= 2 && (view.front() == '*' || view.front() == '_')) view.remove_prefix(1);
    while (!view.empty() && (view.back() == '*' || view.back() == '_')) view.remove_suffix(1);
    return detail::join(detail::split_words(view), " ");
}

/// Length of a list marker ("- ", "* ", "• ", "12. ", "3) ") at the start of `text`, or 0.
std::size_t marker_length(std::string_view text) {
    if (text.size() >= 2 && (text[0] == '-' || text[0] == '*' || text[0] == '+') && text[1] == ' ') return 2;
    if (text.rfind("•", 0) == 0) {
        std::size_t n = std::string_view("•").size();
        while (n < text.size() && text[n] == ' ') ++n;
        return n;
    }
    std::size_t i = 0;
    while (i < text.size() && i < 3 && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
    if (i > 0 && i + 1 < text.size() && (text[i] == '.' || text[i] == ')') && text[i + 1] == ' ') return i + 2;
    return 0;
}

std::vector<Line> split_lines(std::string_view response) {
    std::vector<Line> lines;
    std::size_t start = 0;
    while (start <= response.size()) {
        auto end = response.find('\n', start);
        if (end == std::string_view::npos) end = response.size();
        std::string_view raw = response.substr(start, end - start);
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        Line line;
        for (std::size_t pos = 0; pos < raw.size() && (raw[pos] == ' ' || raw[pos] == '\t'); ++pos) {
            line.indent += raw[pos] == '\t' ? 4 : 1;
        }
        std::string_view body = detail::trim(raw);
        line.raw = std::string(body);
        line.blank = body.empty();
        if (const auto m = marker_length(body); m > 0) {
            line.item = true;
            body.remove_prefix(m);
        } else if (body.rfind("**", 0) == 0 && (body.find(":**") != std::string_view::npos ||
                                                body.find("**:") != std::string_view::npos)) {
            line.item = true;
        }
        line.text = strip_markup(body);
        lines.push_back(std::move(line));
        if (end == response.size()) break;
        start = end + 1;
    }
    return lines;
}

bool ends_sentence(const std::string& text) {
    if (text.empty()) return true;
    const char c = text.back();
    return c == '.' || c == '!' || c == '?' || c == ':';
}

struct RawItem {
    std::string label;
    std::string body;
};

RawItem split_label(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos || colon == 0) return {{}, text};
    const std::string label(detail::trim(std::string_view(text).substr(0, colon)));
    if (detail::word_count(label) > 6) return {{}, text};
    return {label, std::string(detail::trim(std::string_view(text).substr(colon + 1)))};
}

/// Groups list items; deeper-indented items and wrapped lines fold into the item above.
std::vector<RawItem> collect_items(std::span<const Line> lines) {
    std::vector<RawItem> items;
    std::vector<std::string> texts;
    std::optional<std::size_t> current_indent;
    bool open = false;
    bool after_blank = false;
    for (const auto& line : lines) {
        if (line.blank) {
            after_blank = true;
            continue;
        }
        if (line.item && open && current_indent && line.indent > *current_indent) {
            texts.back() += " " + line.text;
        } else if (line.item) {
            texts.push_back(line.text);
            current_indent = line.indent;
            open = true;
        } else if (open && (!after_blank || !ends_sentence(texts.back()))) {
            texts.back() += " " + line.text;
        } else {
            open = false;
        }
        after_blank = false;
    }
    for (const auto& text : texts) items.push_back(split_label(text));
    return items;
}

struct Cue {
    std::string_view text;
    int weight;
};

constexpr Cue kDirectionCues[] = {
    {"strong", 1},      {"growth", 1},      {"grow", 1},          {"increase", 1},       {"robust", 1},
    {"effective", 1},   {"efficient", 1},   {"improv", 1},        {"expan", 1},          {"high ", 1},
    {"highest", 1},     {"steady", 1},      {"success", 1},       {"leading", 1},        {"opportunit", 1},
    {"wide range", 1},  {"diverse", 1},     {"gain", 1},          {"rising", 1},         {"outpac", 1},
    {"solid", 1},       {"well-managed", 1}, {"favorable", 1},    {"recognition", 1},    {"positive", 1},
    {"weak", -1},       {"decline", -1},    {"decreas", -1},      {"low ", -1},          {"lowest", -1},
    {"challenge", -1},  {"negative", -1},   {"risk", -1},         {"concern", -1},       {"pressure", -1},
    {"dependence", -1}, {"downturn", -1},   {"threat", -1},       {"intense", -1},       {"loss", -1},
    {"fluctuat", -1},   {"difficult", -1},  {"lack", -1},         {"missed", -1},        {"exposure", -1},
    {"reliance", -1},   {"unfavorable", -1}, {"not optimized", -1}, {"poor", -1},        {"competition from", -1},
};

const std::string_view kRefusalCues[] = {
    "lacks specific data", "does not contain", "doesn't contain", "not provided", "i'm sorry", "i am sorry",
    "i cannot", "i can't", "unable to", "insufficient", "cannot determine", "not possible", "lacks",
};

std::string normalize_heading(std::string_view text) {
    std::string out;
    int depth = 0;
    for (char c : text) {
        if (c == '(') ++depth;
        else if (c == ')') depth = std::max(0, depth - 1);
        else if (depth == 0) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : ' ');
    }
    return detail::join(detail::split_words(out), " ");
}

std::optional<std::size_t> match_slot(const Line& line, const frameworks::FrameworkSchema& schema) {
    std::string_view candidate = line.raw;
    while (!candidate.empty() && candidate.front() == '#') candidate.remove_prefix(1);
    if (const auto m = marker_length(detail::trim(candidate)); m > 0) candidate = detail::trim(candidate).substr(m);
    const std::string norm = normalize_heading(candidate);
    if (norm.empty() || detail::word_count(norm) > 8) return std::nullopt;
    for (std::size_t i = 0; i < schema.slots.size(); ++i) {
        const auto& slot = schema.slots[i];
        std::vector<std::string> names{normalize_heading(slot.title), normalize_heading(slot.id)};
        for (const auto& s : slot.synonyms) names.push_back(normalize_heading(s));
        if (std::find(names.begin(), names.end(), norm) != names.end()) return i;
    }
    return std::nullopt;
}

bool looks_like_heading(const Line& line) {
    if (line.blank || line.item) return false;
    const auto& raw = line.raw;
    const bool colon = !raw.empty() && (raw.back() == ':' || raw.ends_with(":**"));
    const bool marked = raw.front() == '#' || (raw.starts_with("**") && raw.ends_with("**"));
    return (colon || marked) && detail::word_count(line.text) <= 6;
}

std::string model_slug(std::string_view model) {
    auto slug = detail::slugify(model);
    return slug.empty() ? "llm" : slug;
}

std::string padded(std::size_t n) {
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "%02zu", n);
    return buffer;
}

std::optional<Insight> make_llm_insight(const RawItem& item, std::string id, std::string_view model) {
    std::string text = item.body;
    if (detail::word_count(text) < insight::kMinStatementWords && !item.label.empty()) {
        text = item.label + (text.empty() ? "" : ": " + text);
    }
    auto statement = insight::fit_statement(text);
    if (!statement) return std::nullopt;
    const std::string whole = item.label + " " + item.body;
    Insight out;
    out.id = std::move(id);
    out.statement = std::move(*statement);
    out.direction = direction_for_text(whole);
    out.magnitude = kLlmMagnitude;
    out.themes = insight::themes_for_text(whole);
    out.provenance = insight::LlmProvenance{std::string(model)};
    return out;
}

}  // namespace

Direction direction_for_text(std::string_view text) {
    const std::string lowered = detail::lower(text) + " ";
    int score = 0;
    for (const auto& cue : kDirectionCues) {
        for (auto pos = lowered.find(cue.text); pos != std::string::npos; pos = lowered.find(cue.text, pos + 1)) {
            score += cue.weight;
        }
    }
    if (score > 0) return Direction::positive;
    if (score < 0) return Direction::negative;
    return Direction::neutral;
}

std::vector<Insight> parse_insight_list(std::string_view response, std::string_view model) {
    const auto lines = split_lines(response);
    std::vector<Insight> out;
    const auto prefix = "llm/" + model_slug(model) + "/";
    for (const auto& item : collect_items(lines)) {
        if (auto insight = make_llm_insight(item, prefix + padded(out.size() + 1), model)) {
            out.push_back(std::move(*insight));
        }
    }
    if (out.empty()) throw LlmError(LlmError::Kind::no_items_found, "response contains no list items");
    return out;
}

FrameworkParse parse_framework_assignment(std::string_view response, const frameworks::FrameworkSchema& schema,
                                          std::string subject, std::string_view model) {
    const auto lines = split_lines(response);
    FrameworkParse result;
    auto& diagnostics = result.diagnostics;

    // Section boundaries: matched slot headings and unmatched heading-like lines.
    std::vector<std::vector<Line>> sections(schema.slots.size());
    std::optional<std::size_t> current;
    bool any_heading = false;
    for (const auto& line : lines) {
        if (auto slot = match_slot(line, schema)) {
            current = slot;
            any_heading = true;
            continue;
        }
        if (looks_like_heading(line)) {
            diagnostics.push_back({"UnmatchedHeading", "heading '" + line.text + "' matches no " + schema.name + " slot"});
            current.reset();
            continue;
        }
        if (current) sections[*current].push_back(line);
    }

    if (!any_heading) {
        const std::string lowered = detail::lower(response);
        for (const auto cue : kRefusalCues) {
            if (lowered.find(cue) != std::string::npos) {
                throw LlmError(LlmError::Kind::refusal,
                               "the response declines the " + schema.name + " analysis: " +
                                   std::string(detail::trim(response.substr(0, 240))));
            }
        }
        throw LlmError(LlmError::Kind::no_slot_headings, "no " + schema.name + " slot headings in the response");
    }

    auto& analysis = result.analysis;
    analysis.schema = schema;
    analysis.subject = std::move(subject);
    analysis.slots.resize(schema.slots.size());
    const auto prefix = "llm/" + model_slug(model) + "/";
    std::size_t total = 0;
    for (std::size_t s = 0; s < sections.size(); ++s) {
        std::vector<frameworks::Assignment> assigned;
        for (const auto& item : collect_items(sections[s])) {
            const auto id = prefix + schema.slots[s].id + "/" + padded(assigned.size() + 1);
            if (auto insight = make_llm_insight(item, id, model)) {
                assigned.push_back({std::move(*insight), kLlmFit});
            } else {
                diagnostics.push_back({"ShortFactor", "dropped a factor under '" + schema.slots[s].title +
                                                          "' with fewer than 5 words"});
            }
        }
        total += assigned.size();
        frameworks::rank_assignments(assigned);
        auto& slot = analysis.slots[s];
        const auto keep = std::min(assigned.size(), schema.max_per_slot);
        slot.factors.assign(assigned.begin(), assigned.begin() + static_cast<std::ptrdiff_t>(keep));
        slot.overflow.assign(assigned.begin() + static_cast<std::ptrdiff_t>(keep), assigned.end());
        if (!slot.overflow.empty()) {
            diagnostics.push_back({"SlotOverflow", schema.slots[s].title + ": kept " + std::to_string(keep) + " of " +
                                                       std::to_string(assigned.size()) + " factors"});
        }
    }
    if (total == 0) diagnostics.push_back({"EmptyAnalysis", "slot headings found but no factors under them"});
    frameworks::derive_attributes(analysis);

    const auto violations = frameworks::validate_analysis(analysis);
    if (!violations.empty()) {
        throw LlmError(LlmError::Kind::invalid_analysis,
                       std::string(frameworks::to_string(violations.front().kind)) + ": " + violations.front().message);
    }
    return result;
}

}  // namespace stratagem::llm
