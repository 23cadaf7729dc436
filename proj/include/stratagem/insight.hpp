#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stratagem::insight {

enum class ThemeTag {
    market_presence,
    online_channel,
    brand_marketing,
    supply_chain,
    profitability,
    product_diversity,
    public_sentiment,
    growth,
    competition,
    cost,
};

inline constexpr std::size_t kThemeCount = 10;

std::string_view to_string(ThemeTag tag);
std::optional<ThemeTag> theme_from_string(std::string_view text);
const std::vector<ThemeTag>& all_themes();

/// Themes whose keywords occur in `text`, in enumeration order. This one
/// keyword table serves both metric names and LLM-sourced statements.
std::vector<ThemeTag> themes_for_text(std::string_view text);

enum class Direction { positive, negative, neutral };

std::string_view to_string(Direction direction);
std::optional<Direction> direction_from_string(std::string_view text);
/// +1, -1 or 0.
int sign(Direction direction);

enum class EvidenceKind { metric_value, computed_ratio, trend_slope, rank, cycle_stat };

std::string_view to_string(EvidenceKind kind);
std::optional<EvidenceKind> evidence_kind_from_string(std::string_view text);

struct Ref {
    enum class Kind { metric, entity, date, label };
    Kind kind = Kind::label;
    std::string name;

    bool operator==(const Ref&) const = default;
    auto operator<=>(const Ref&) const = default;
};

Ref metric_ref(std::string name);
Ref entity_ref(std::string name);
Ref date_ref(std::string name);
Ref label_ref(std::string name);

struct Evidence {
    EvidenceKind kind = EvidenceKind::metric_value;
    std::vector<Ref> refs;
    double value = 0.0;

    bool operator==(const Evidence&) const = default;
};

enum class RuleId {
    trend,
    peer_comparison,
    ratio_share,
    sentiment_balance,
    sentiment_contrast,
    weekly_cycle,
    benchmark_surprise,
};

std::string_view to_string(RuleId rule);
std::optional<RuleId> rule_from_string(std::string_view text);

struct RuleProvenance {
    RuleId rule;
    bool operator==(const RuleProvenance&) const = default;
};

struct LlmProvenance {
    std::string model;
    bool operator==(const LlmProvenance&) const = default;
};

using Provenance = std::variant<RuleProvenance, LlmProvenance>;

inline constexpr std::size_t kMinStatementWords = 5;
inline constexpr std::size_t kMaxStatementWords = 40;

struct Insight {
    std::string id;
    std::string statement;
    Direction direction = Direction::neutral;
    double magnitude = 0.0;
    std::vector<ThemeTag> themes;
    std::vector<Evidence> evidence;
    Provenance provenance = RuleProvenance{RuleId::trend};

    bool operator==(const Insight&) const = default;
};

/// Empty when `insight` satisfies every Insight invariant.
std::vector<std::string> check_insight(const Insight& insight);

/// Normalizes a free-text statement into the 5..40 word window: collapses
/// whitespace, then cuts overlong text at the last sentence end inside the
/// window (or hard-cuts at 40 words). Returns nullopt below 5 words.
std::optional<std::string> fit_statement(std::string_view text);

nlohmann::ordered_json to_json(const Insight& insight);
nlohmann::ordered_json to_json(const std::vector<Insight>& insights);

/// Parses one insight; appends a message per problem to `violations` and
/// returns nullopt if any were found. `where` prefixes messages.
std::optional<Insight> insight_from_json(const nlohmann::json& j, const std::string& where,
                                         std::vector<std::string>& violations);

struct InsightSet {
    std::string subject;
    std::vector<Insight> insights;
};

nlohmann::ordered_json to_json(const InsightSet& set);
/// Accepts {"subject", "insights": [...]} or a bare array. Collects every
/// violation rather than stopping at the first.
std::optional<InsightSet> insight_set_from_json(const nlohmann::json& j, std::vector<std::string>& violations);

}  // namespace stratagem::insight
