#pragma once

#include "stratagem/insight.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace stratagem::frameworks {

using insight::Direction;
using insight::Insight;
using insight::ThemeTag;

enum class FrameworkKind { swot, porter5, virtuous_cycle, value_discipline, custom };

std::string_view to_string(FrameworkKind kind);
/// Accepts the canonical names plus a few CLI spellings ("cycle", "value-discipline", "porter").
std::optional<FrameworkKind> kind_from_string(std::string_view text);

enum class Layout { grid, hub_spoke, cycle, radar };

std::string_view to_string(Layout layout);
std::optional<Layout> layout_from_string(std::string_view text);

class FrameworkError : public std::runtime_error {
public:
    enum class Kind { unknown_kind, invalid_schema };
    FrameworkError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

using AffinityTable = std::map<std::pair<ThemeTag, Direction>, double>;

struct SlotDescriptor {
    std::string id;
    std::string title;
    AffinityTable affinity;
    /// Alternative headings an LLM may use for this slot.
    std::vector<std::string> synonyms;
};

struct FrameworkSchema {
    FrameworkKind kind = FrameworkKind::swot;
    std::string name;
    Layout layout = Layout::grid;
    std::vector<SlotDescriptor> slots;
    std::size_t max_per_slot = 4;
    std::size_t min_words = insight::kMinStatementWords;
    std::size_t max_words = insight::kMaxStatementWords;
    double fit_floor = 0.3;
    /// Slot drawn in the middle of a hub layout.
    std::optional<std::size_t> central_slot;
};

/// Throws FrameworkError(unknown_kind) for FrameworkKind::custom.
FrameworkSchema schema_for(FrameworkKind kind);

/// {"name", "layout"?, "max_per_slot"?, "slots": [{"id", "title", "synonyms"?,
///   "affinity": [{"theme", "direction", "weight"}]}]}
FrameworkSchema load_custom_schema(const nlohmann::json& j);

/// Empty when the schema is well formed.
std::vector<std::string> check_schema(const FrameworkSchema& schema);

enum class RiskLevel { low, moderate, high, intense };

std::string_view to_string(RiskLevel level);
std::optional<RiskLevel> risk_from_string(std::string_view text);
RiskLevel risk_from_score(double s);

struct AxisScore {
    double value = 5.0;
    std::size_t contributing = 0;

    bool operator==(const AxisScore&) const = default;
};

using SlotAttribute = std::variant<std::monostate, RiskLevel, AxisScore>;

struct Assignment {
    Insight insight;
    double fit = 0.0;

    bool operator==(const Assignment&) const = default;
};

struct SlotAssignment {
    std::vector<Assignment> factors;
    /// Items that fit this slot best but fell past max_per_slot.
    std::vector<Assignment> overflow;
    SlotAttribute attribute;

    bool operator==(const SlotAssignment&) const = default;
};

struct OrganizedAnalysis {
    FrameworkSchema schema;
    std::string subject;
    std::vector<SlotAssignment> slots;  // parallel to schema.slots
    std::vector<Insight> unplaced;
};

/// fit per slot: max over the insight's themes of affinity(theme, direction).
std::vector<double> classify_insight(const Insight& insight, const FrameworkSchema& schema);

/// Ranking rule inside a slot: fit * magnitude descending, then id.
void rank_assignments(std::vector<Assignment>& assignments);

OrganizedAnalysis organize(const std::vector<Insight>& insights, const FrameworkSchema& schema,
                           std::string subject = {});

/// Recomputes risk levels / axis scores from factors + overflow.
void derive_attributes(OrganizedAnalysis& analysis);

/// Combined negative pressure: 1 - prod(1 - fit * magnitude) over negative items.
double risk_score(std::span<const Assignment> assignments);
RiskLevel assign_risk(std::span<const Assignment> assignments);

/// sum of fit * magnitude * sign(direction).
double axis_raw(std::span<const Assignment> assignments);
double logistic_score(double raw);
AxisScore score_axis(std::span<const Assignment> assignments);

struct Violation {
    enum class Kind {
        slot_count,
        slot_overflow,
        missing_attribute,
        unexpected_attribute,
        duplicate_insight,
        word_count,
        ordering,
        fit_range,
        invalid_insight,
    };
    Kind kind;
    std::string message;
};

std::string_view to_string(Violation::Kind kind);

std::vector<Violation> validate_analysis(const OrganizedAnalysis& analysis);

nlohmann::ordered_json to_json(const OrganizedAnalysis& analysis);

/// Rebuilds an analysis from its JSON form. Built-in kinds take their schema
/// from schema_for; custom kinds keep the slot ids/titles found in the file.
/// Problems are appended to `problems`; nullopt when the document is unusable.
std::optional<OrganizedAnalysis> analysis_from_json(const nlohmann::json& j, std::vector<std::string>& problems);

}  // namespace stratagem::frameworks
