#include "stratagem/frameworks.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace stratagem::frameworks {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

struct Weight {
    ThemeTag theme;
    Direction direction;
    double weight;
};

constexpr Direction kPos = Direction::positive;
constexpr Direction kNeg = Direction::negative;
constexpr Direction kNeu = Direction::neutral;

AffinityTable table(std::initializer_list<Weight> weights) {
    AffinityTable out;
    for (const auto& w : weights) out[{w.theme, w.direction}] = w.weight;
    return out;
}

/// Same weight whatever the direction.
AffinityTable any_direction(std::initializer_list<std::pair<ThemeTag, double>> weights) {
    AffinityTable out;
    for (const auto& [theme, weight] : weights) {
        for (auto d : {kPos, kNeg, kNeu}) out[{theme, d}] = weight;
    }
    return out;
}

/// Stage weights for the cycle: full for positive, 3/4 neutral, half negative.
AffinityTable stage(std::initializer_list<std::pair<ThemeTag, double>> weights) {
    AffinityTable out;
    for (const auto& [theme, weight] : weights) {
        out[{theme, kPos}] = weight;
        out[{theme, kNeu}] = weight * 0.75;
        out[{theme, kNeg}] = weight * 0.5;
    }
    return out;
}

FrameworkSchema swot() {
    using T = ThemeTag;
    FrameworkSchema s;
    s.kind = FrameworkKind::swot;
    s.name = "SWOT";
    s.layout = Layout::grid;
    s.slots = {
        {"strengths", "Strengths",
         table({{T::market_presence, kPos, 1.0}, {T::online_channel, kPos, 1.0}, {T::brand_marketing, kPos, 1.0},
                {T::supply_chain, kPos, 1.0}, {T::profitability, kPos, 1.0}, {T::product_diversity, kPos, 1.0},
                {T::public_sentiment, kPos, 1.0}, {T::growth, kPos, 1.0}, {T::competition, kPos, 1.0},
                {T::cost, kPos, 1.0}}),
         {"strength"}},
        {"weaknesses", "Weaknesses",
         table({{T::market_presence, kNeg, 1.0}, {T::online_channel, kNeg, 1.0}, {T::brand_marketing, kNeg, 1.0},
                {T::supply_chain, kNeg, 1.0}, {T::profitability, kNeg, 1.0}, {T::product_diversity, kNeg, 1.0},
                {T::cost, kNeg, 1.0}, {T::growth, kNeg, 0.8}, {T::public_sentiment, kNeg, 0.7}}),
         {"weakness"}},
        {"opportunities", "Opportunities",
         table({{T::online_channel, kNeu, 0.8}, {T::growth, kNeu, 0.8}, {T::market_presence, kNeu, 0.6},
                {T::product_diversity, kNeu, 0.6}, {T::online_channel, kNeg, 0.6}, {T::brand_marketing, kNeu, 0.5},
                {T::public_sentiment, kNeu, 0.5}}),
         {"opportunity"}},
        {"threats", "Threats",
         table({{T::competition, kNeg, 1.0}, {T::public_sentiment, kNeg, 0.9}, {T::cost, kNeg, 0.8},
                {T::competition, kNeu, 0.7}, {T::cost, kNeu, 0.5}, {T::supply_chain, kNeu, 0.5}}),
         {"threat"}},
    };
    return s;
}

FrameworkSchema porter5() {
    using T = ThemeTag;
    FrameworkSchema s;
    s.kind = FrameworkKind::porter5;
    s.name = "Porter's Five Forces";
    s.layout = Layout::hub_spoke;
    s.slots = {
        {"rivalry", "Competitive Rivalry",
         any_direction({{T::competition, 0.85}, {T::market_presence, 0.6}, {T::profitability, 0.6},
                        {T::brand_marketing, 0.5}}),
         {"rivalry", "industry rivalry", "rivalry among existing competitors", "competition in the industry",
          "competitive rivalry"}},
        {"supplier_power", "Supplier Power", any_direction({{T::supply_chain, 1.0}, {T::cost, 0.9}}),
         {"bargaining power of suppliers", "power of suppliers", "suppliers"}},
        {"buyer_power", "Buyer Power",
         any_direction({{T::public_sentiment, 0.9}, {T::online_channel, 0.8}, {T::brand_marketing, 0.7}}),
         {"bargaining power of buyers", "bargaining power of customers", "power of buyers", "buyers", "customers"}},
        {"new_entrants", "Threat of New Entrants", any_direction({{T::growth, 0.8}, {T::market_presence, 0.5}}),
         {"new entrants", "threat of entry", "entrants"}},
        {"substitutes", "Threat of Substitutes",
         table({{T::product_diversity, kPos, 0.9}, {T::product_diversity, kNeg, 0.9}, {T::product_diversity, kNeu, 0.9},
                {T::online_channel, kNeg, 0.5}}),
         {"substitutes", "substitute products", "threat of substitute products or services"}},
    };
    s.central_slot = 0;
    return s;
}

FrameworkSchema virtuous_cycle() {
    using T = ThemeTag;
    FrameworkSchema s;
    s.kind = FrameworkKind::virtuous_cycle;
    s.name = "Virtuous Cycle";
    s.layout = Layout::cycle;
    s.slots = {
        {"invest", "Invest", stage({{T::cost, 1.0}, {T::supply_chain, 0.8}, {T::market_presence, 0.7}}), {"investment"}},
        {"improve_offering", "Improve Offering",
         stage({{T::product_diversity, 1.0}, {T::online_channel, 0.8}, {T::supply_chain, 0.5}}),
         {"improve the offering", "better offering", "offering"}},
        {"attract_customers", "Attract Customers",
         stage({{T::brand_marketing, 1.0}, {T::public_sentiment, 0.9}, {T::competition, 0.5}}),
         {"attract more customers", "customers"}},
        {"grow_revenue", "Grow Revenue",
         stage({{T::growth, 1.0}, {T::profitability, 1.0}, {T::market_presence, 0.6}}),
         {"revenue growth", "grow sales"}},
    };
    return s;
}

FrameworkSchema value_discipline() {
    using T = ThemeTag;
    FrameworkSchema s;
    s.kind = FrameworkKind::value_discipline;
    s.name = "Value Discipline";
    s.layout = Layout::radar;
    s.slots = {
        {"operational_excellence", "Operational Excellence",
         any_direction({{T::supply_chain, 1.0}, {T::cost, 1.0}, {T::profitability, 0.8}, {T::market_presence, 0.5}}),
         {"operational excellence", "operations"}},
        {"product_leadership", "Product Leadership",
         any_direction({{T::product_diversity, 1.0}, {T::growth, 0.5}, {T::competition, 0.4}}),
         {"product leadership", "product"}},
        {"customer_intimacy", "Customer Intimacy",
         any_direction({{T::public_sentiment, 1.0}, {T::brand_marketing, 0.9}, {T::online_channel, 0.8}}),
         {"customer intimacy", "customer"}},
    };
    return s;
}

double rank_key(const Assignment& a) { return a.fit * a.insight.magnitude; }

bool ranks_before(const Assignment& a, const Assignment& b) {
    const double ka = rank_key(a);
    const double kb = rank_key(b);
    if (ka != kb) return ka > kb;
    return a.insight.id < b.insight.id;
}

bool attribute_expected(FrameworkKind kind, const SlotAttribute& attribute) {
    switch (kind) {
        case FrameworkKind::porter5: return std::holds_alternative<RiskLevel>(attribute);
        case FrameworkKind::value_discipline: return std::holds_alternative<AxisScore>(attribute);
        default: return std::holds_alternative<std::monostate>(attribute);
    }
}

ojson assignment_json(const Assignment& a) {
    ojson j = insight::to_json(a.insight);
    j["fit"] = a.fit;
    return j;
}

std::optional<Assignment> assignment_from_json(const json& j, const std::string& where,
                                               std::vector<std::string>& problems) {
    auto parsed = insight::insight_from_json(j, where, problems);
    if (!j.is_object() || !j.contains("fit") || !j["fit"].is_number()) {
        problems.push_back(where + ": missing numeric 'fit'");
        return std::nullopt;
    }
    if (!parsed) return std::nullopt;
    return Assignment{std::move(*parsed), j["fit"].get<double>()};
}

}  // namespace

std::string_view to_string(FrameworkKind kind) {
    switch (kind) {
        case FrameworkKind::swot: return "swot";
        case FrameworkKind::porter5: return "porter5";
        case FrameworkKind::virtuous_cycle: return "virtuous_cycle";
        case FrameworkKind::value_discipline: return "value_discipline";
        case FrameworkKind::custom: return "custom";
    }
    return "custom";
}

std::optional<FrameworkKind> kind_from_string(std::string_view text) {
    const std::string t = detail::lower(detail::trim(text));
    if (t == "swot") return FrameworkKind::swot;
    if (t == "porter5" || t == "porter" || t == "five-forces" || t == "five_forces") return FrameworkKind::porter5;
    if (t == "virtuous_cycle" || t == "virtuous-cycle" || t == "cycle") return FrameworkKind::virtuous_cycle;
    if (t == "value_discipline" || t == "value-discipline") return FrameworkKind::value_discipline;
    if (t == "custom") return FrameworkKind::custom;
    return std::nullopt;
}

std::string_view to_string(Layout layout) {
    switch (layout) {
        case Layout::grid: return "grid";
        case Layout::hub_spoke: return "hub_spoke";
        case Layout::cycle: return "cycle";
        case Layout::radar: return "radar";
    }
    return "grid";
}

std::optional<Layout> layout_from_string(std::string_view text) {
    for (auto l : {Layout::grid, Layout::hub_spoke, Layout::cycle, Layout::radar}) {
        if (to_string(l) == text) return l;
    }
    return std::nullopt;
}

FrameworkSchema schema_for(FrameworkKind kind) {
    switch (kind) {
        case FrameworkKind::swot: return swot();
        case FrameworkKind::porter5: return porter5();
        case FrameworkKind::virtuous_cycle: return virtuous_cycle();
        case FrameworkKind::value_discipline: return value_discipline();
        case FrameworkKind::custom: break;
    }
    throw FrameworkError(FrameworkError::Kind::unknown_kind, "no built-in schema for this framework kind");
}

std::vector<std::string> check_schema(const FrameworkSchema& schema) {
    std::vector<std::string> problems;
    const std::size_t n = schema.slots.size();
    switch (schema.kind) {
        case FrameworkKind::swot:
            if (n != 4) problems.push_back("swot needs 4 slots, has " + std::to_string(n));
            break;
        case FrameworkKind::porter5:
            if (n != 5) problems.push_back("porter5 needs 5 slots, has " + std::to_string(n));
            if (!schema.central_slot) problems.emplace_back("porter5 needs a central slot");
            break;
        case FrameworkKind::value_discipline:
            if (n != 3) problems.push_back("value_discipline needs 3 slots, has " + std::to_string(n));
            break;
        case FrameworkKind::virtuous_cycle:
            if (n < 3 || n > 8) problems.push_back("virtuous_cycle needs 3..8 stages, has " + std::to_string(n));
            break;
        case FrameworkKind::custom:
            if (n == 0) problems.emplace_back("custom schema has no slots");
            break;
    }
    if (schema.central_slot && *schema.central_slot >= n) problems.emplace_back("central slot out of range");
    if (schema.max_per_slot == 0) problems.emplace_back("max_per_slot must be positive");
    std::set<std::string> ids;
    for (const auto& slot : schema.slots) {
        if (slot.id.empty()) problems.emplace_back("slot with empty id");
        if (!ids.insert(slot.id).second) problems.push_back("duplicate slot id '" + slot.id + "'");
        const bool any = std::any_of(slot.affinity.begin(), slot.affinity.end(),
                                     [](const auto& kv) { return kv.second > 0.0; });
        if (!any) problems.push_back("slot '" + slot.id + "' has no nonzero affinity");
        for (const auto& [key, weight] : slot.affinity) {
            if (!(weight >= 0.0 && weight <= 1.0)) problems.push_back("slot '" + slot.id + "' has weight outside [0,1]");
        }
    }
    return problems;
}

FrameworkSchema load_custom_schema(const json& j) {
    auto bad = [](const std::string& message) {
        return FrameworkError(FrameworkError::Kind::invalid_schema, message);
    };
    if (!j.is_object()) throw bad("schema file must hold an object");
    FrameworkSchema schema;
    schema.kind = FrameworkKind::custom;
    schema.name = j.value("name", std::string("Custom"));
    if (j.contains("layout")) {
        const auto layout = j["layout"].is_string() ? layout_from_string(j["layout"].get<std::string>()) : std::nullopt;
        if (!layout) throw bad("unknown layout " + j["layout"].dump());
        schema.layout = *layout;
    }
    if (j.contains("max_per_slot")) {
        if (!j["max_per_slot"].is_number_unsigned()) throw bad("max_per_slot must be a positive integer");
        schema.max_per_slot = j["max_per_slot"].get<std::size_t>();
    }
    if (!j.contains("slots") || !j["slots"].is_array()) throw bad("schema needs a 'slots' array");
    for (const auto& s : j["slots"]) {
        if (!s.is_object() || !s.contains("id") || !s["id"].is_string()) throw bad("slot without string id");
        SlotDescriptor slot;
        slot.id = s["id"].get<std::string>();
        slot.title = s.value("title", slot.id);
        if (s.contains("synonyms")) {
            for (const auto& syn : s["synonyms"]) {
                if (syn.is_string()) slot.synonyms.push_back(syn.get<std::string>());
            }
        }
        for (const auto& a : s.value("affinity", json::array())) {
            const auto theme = a.contains("theme") && a["theme"].is_string()
                                   ? insight::theme_from_string(a["theme"].get<std::string>())
                                   : std::nullopt;
            if (!theme) throw bad("slot '" + slot.id + "': unknown theme in " + a.dump());
            if (!a.contains("weight") || !a["weight"].is_number()) throw bad("slot '" + slot.id + "': weight missing");
            const double weight = a["weight"].get<double>();
            const std::string dir = a.value("direction", std::string("any"));
            if (dir == "any") {
                for (auto d : {kPos, kNeg, kNeu}) slot.affinity[{*theme, d}] = weight;
            } else if (auto d = insight::direction_from_string(dir)) {
                slot.affinity[{*theme, *d}] = weight;
            } else {
                throw bad("slot '" + slot.id + "': unknown direction '" + dir + "'");
            }
        }
        schema.slots.push_back(std::move(slot));
    }
    if (schema.layout == Layout::hub_spoke) schema.central_slot = 0;
    if (const auto problems = check_schema(schema); !problems.empty()) throw bad(problems.front());
    return schema;
}

std::string_view to_string(RiskLevel level) {
    switch (level) {
        case RiskLevel::low: return "low";
        case RiskLevel::moderate: return "moderate";
        case RiskLevel::high: return "high";
        case RiskLevel::intense: return "intense";
    }
    return "low";
}

std::optional<RiskLevel> risk_from_string(std::string_view text) {
    for (auto l : {RiskLevel::low, RiskLevel::moderate, RiskLevel::high, RiskLevel::intense}) {
        if (to_string(l) == text) return l;
    }
    return std::nullopt;
}

RiskLevel risk_from_score(double s) {
    if (s < 0.25) return RiskLevel::low;
    if (s < 0.5) return RiskLevel::moderate;
    if (s < 0.75) return RiskLevel::high;
    return RiskLevel::intense;
}

std::vector<double> classify_insight(const Insight& insight, const FrameworkSchema& schema) {
    std::vector<double> fits(schema.slots.size(), 0.0);
    for (std::size_t i = 0; i < schema.slots.size(); ++i) {
        for (auto theme : insight.themes) {
            const auto it = schema.slots[i].affinity.find({theme, insight.direction});
            if (it != schema.slots[i].affinity.end()) fits[i] = std::max(fits[i], std::clamp(it->second, 0.0, 1.0));
        }
    }
    return fits;
}

void rank_assignments(std::vector<Assignment>& assignments) {
    std::sort(assignments.begin(), assignments.end(), ranks_before);
}

OrganizedAnalysis organize(const std::vector<Insight>& insights, const FrameworkSchema& schema, std::string subject) {
    OrganizedAnalysis analysis;
    analysis.schema = schema;
    analysis.subject = std::move(subject);
    std::vector<std::vector<Assignment>> candidates(schema.slots.size());
    for (const auto& insight : insights) {
        const auto fits = classify_insight(insight, schema);
        const auto best = std::max_element(fits.begin(), fits.end());
        if (best == fits.end() || *best < schema.fit_floor) {
            analysis.unplaced.push_back(insight);
            continue;
        }
        candidates[static_cast<std::size_t>(best - fits.begin())].push_back({insight, *best});
    }
    std::sort(analysis.unplaced.begin(), analysis.unplaced.end(),
              [](const Insight& a, const Insight& b) { return a.id < b.id; });
    for (auto& list : candidates) {
        rank_assignments(list);
        SlotAssignment slot;
        const std::size_t keep = std::min(list.size(), schema.max_per_slot);
        slot.factors.assign(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(keep));
        slot.overflow.assign(list.begin() + static_cast<std::ptrdiff_t>(keep), list.end());
        analysis.slots.push_back(std::move(slot));
    }
    derive_attributes(analysis);
    return analysis;
}

void derive_attributes(OrganizedAnalysis& analysis) {
    for (auto& slot : analysis.slots) {
        std::vector<Assignment> all = slot.factors;
        all.insert(all.end(), slot.overflow.begin(), slot.overflow.end());
        switch (analysis.schema.kind) {
            case FrameworkKind::porter5: slot.attribute = assign_risk(all); break;
            case FrameworkKind::value_discipline: slot.attribute = score_axis(all); break;
            default: slot.attribute = std::monostate{}; break;
        }
    }
}

double risk_score(std::span<const Assignment> assignments) {
    double calm = 1.0;
    for (const auto& a : assignments) {
        if (a.insight.direction != Direction::negative) continue;
        calm *= 1.0 - std::clamp(a.fit * a.insight.magnitude, 0.0, 1.0);
    }
    return 1.0 - calm;
}

RiskLevel assign_risk(std::span<const Assignment> assignments) { return risk_from_score(risk_score(assignments)); }

double axis_raw(std::span<const Assignment> assignments) {
    double raw = 0.0;
    for (const auto& a : assignments) raw += a.fit * a.insight.magnitude * insight::sign(a.insight.direction);
    return raw;
}

double logistic_score(double raw) {
    // Doubles round the tails to 0 or 10 once |raw| passes ~37; keep the interval open.
    const double v = 10.0 / (1.0 + std::exp(-raw));
    return std::clamp(v, std::numeric_limits<double>::denorm_min(), std::nextafter(10.0, 0.0));
}

AxisScore score_axis(std::span<const Assignment> assignments) {
    return {logistic_score(axis_raw(assignments)), assignments.size()};
}

std::string_view to_string(Violation::Kind kind) {
    switch (kind) {
        case Violation::Kind::slot_count: return "SlotCount";
        case Violation::Kind::slot_overflow: return "SlotOverflow";
        case Violation::Kind::missing_attribute: return "MissingAttribute";
        case Violation::Kind::unexpected_attribute: return "UnexpectedAttribute";
        case Violation::Kind::duplicate_insight: return "DuplicateInsight";
        case Violation::Kind::word_count: return "WordCount";
        case Violation::Kind::ordering: return "Ordering";
        case Violation::Kind::fit_range: return "FitRange";
        case Violation::Kind::invalid_insight: return "InvalidInsight";
    }
    return "InvalidInsight";
}

std::vector<Violation> validate_analysis(const OrganizedAnalysis& analysis) {
    using K = Violation::Kind;
    std::vector<Violation> out;
    const auto& schema = analysis.schema;
    for (const auto& problem : check_schema(schema)) out.push_back({K::slot_count, problem});
    if (analysis.slots.size() != schema.slots.size()) {
        out.push_back({K::slot_count, "analysis has " + std::to_string(analysis.slots.size()) +
                                          " slots, schema has " + std::to_string(schema.slots.size())});
        return out;
    }

    std::set<std::string> seen;
    auto check_item = [&](const Insight& insight, const std::string& where) {
        if (!seen.insert(insight.id).second) {
            out.push_back({K::duplicate_insight, where + ": insight '" + insight.id + "' appears more than once"});
        }
        const auto words = detail::word_count(insight.statement);
        if (words < schema.min_words || words > schema.max_words) {
            out.push_back({K::word_count, where + ": statement has " + std::to_string(words) + " words"});
        }
        for (const auto& problem : insight::check_insight(insight)) {
            if (problem.rfind("statement has", 0) == 0) continue;
            out.push_back({K::invalid_insight, where + ": " + problem});
        }
    };

    for (std::size_t i = 0; i < analysis.slots.size(); ++i) {
        const auto& slot = analysis.slots[i];
        const std::string where = "slot '" + schema.slots[i].id + "'";
        if (slot.factors.size() > schema.max_per_slot) {
            out.push_back({K::slot_overflow, where + " holds " + std::to_string(slot.factors.size()) +
                                                 " factors, limit " + std::to_string(schema.max_per_slot)});
        }
        if (!attribute_expected(schema.kind, slot.attribute)) {
            const bool missing = std::holds_alternative<std::monostate>(slot.attribute);
            out.push_back({missing ? K::missing_attribute : K::unexpected_attribute,
                           where + (missing ? " lacks its attribute" : " carries an attribute this framework does not use")});
        }
        if (const auto* axis = std::get_if<AxisScore>(&slot.attribute); axis && !(axis->value >= 0 && axis->value <= 10)) {
            out.push_back({K::invalid_insight, where + " axis score outside [0,10]"});
        }
        for (const auto* list : {&slot.factors, &slot.overflow}) {
            for (std::size_t k = 0; k < list->size(); ++k) {
                const auto& a = (*list)[k];
                check_item(a.insight, where);
                if (!(a.fit >= 0.0 && a.fit <= 1.0)) out.push_back({K::fit_range, where + ": fit outside [0,1]"});
                if (k > 0 && ranks_before(a, (*list)[k - 1])) {
                    out.push_back({K::ordering, where + ": '" + a.insight.id + "' is out of rank order"});
                }
            }
        }
        if (!slot.factors.empty() && !slot.overflow.empty() && rank_key(slot.overflow.front()) > rank_key(slot.factors.back())) {
            out.push_back({K::ordering, where + ": an overflow item outranks a displayed factor"});
        }
    }
    for (const auto& insight : analysis.unplaced) check_item(insight, "unplaced");
    return out;
}

ojson to_json(const OrganizedAnalysis& analysis) {
    ojson j;
    j["schema_kind"] = to_string(analysis.schema.kind);
    j["schema_name"] = analysis.schema.name;
    j["layout"] = to_string(analysis.schema.layout);
    j["subject"] = analysis.subject;
    j["max_per_slot"] = analysis.schema.max_per_slot;
    if (analysis.schema.central_slot) j["central_slot"] = analysis.schema.slots[*analysis.schema.central_slot].id;
    auto& slots = j["slots"] = ojson::array();
    for (std::size_t i = 0; i < analysis.slots.size() && i < analysis.schema.slots.size(); ++i) {
        const auto& slot = analysis.slots[i];
        ojson s;
        s["id"] = analysis.schema.slots[i].id;
        s["title"] = analysis.schema.slots[i].title;
        if (const auto* risk = std::get_if<RiskLevel>(&slot.attribute)) {
            s["attribute"] = {{"risk", to_string(*risk)}};
        } else if (const auto* axis = std::get_if<AxisScore>(&slot.attribute)) {
            s["attribute"] = {{"score", axis->value}, {"contributing", axis->contributing}};
        } else {
            s["attribute"] = nullptr;
        }
        auto& factors = s["factors"] = ojson::array();
        for (const auto& a : slot.factors) factors.push_back(assignment_json(a));
        auto& overflow = s["overflow"] = ojson::array();
        for (const auto& a : slot.overflow) overflow.push_back(assignment_json(a));
        slots.push_back(std::move(s));
    }
    j["unplaced"] = insight::to_json(analysis.unplaced);
    return j;
}

std::optional<OrganizedAnalysis> analysis_from_json(const json& j, std::vector<std::string>& problems) {
    const auto before = problems.size();
    if (!j.is_object()) {
        problems.emplace_back("analysis document must be an object");
        return std::nullopt;
    }
    const auto kind = j.contains("schema_kind") && j["schema_kind"].is_string()
                          ? kind_from_string(j["schema_kind"].get<std::string>())
                          : std::nullopt;
    if (!kind) {
        problems.emplace_back("missing or unknown 'schema_kind'");
        return std::nullopt;
    }
    if (!j.contains("slots") || !j["slots"].is_array()) {
        problems.emplace_back("missing 'slots' array");
        return std::nullopt;
    }
    const auto& slots = j["slots"];

    OrganizedAnalysis analysis;
    if (*kind == FrameworkKind::custom) {
        analysis.schema.kind = FrameworkKind::custom;
        analysis.schema.name = j.value("schema_name", std::string("Custom"));
        const auto layout = layout_from_string(j.value("layout", std::string("grid")));
        if (!layout) problems.emplace_back("unknown layout");
        analysis.schema.layout = layout.value_or(Layout::grid);
        for (const auto& s : slots) {
            SlotDescriptor slot;
            slot.id = s.value("id", std::string());
            slot.title = s.value("title", slot.id);
            // Affinities are not serialized; a placeholder keeps the schema well formed.
            for (auto d : {kPos, kNeg, kNeu}) slot.affinity[{ThemeTag::growth, d}] = 1.0;
            analysis.schema.slots.push_back(std::move(slot));
        }
        if (j.contains("central_slot")) {
            for (std::size_t i = 0; i < analysis.schema.slots.size(); ++i) {
                if (analysis.schema.slots[i].id == j["central_slot"]) analysis.schema.central_slot = i;
            }
        }
    } else {
        analysis.schema = schema_for(*kind);
        if (slots.size() != analysis.schema.slots.size()) {
            problems.push_back(std::string(to_string(*kind)) + " analysis needs " +
                               std::to_string(analysis.schema.slots.size()) + " slots, found " +
                               std::to_string(slots.size()));
            return std::nullopt;
        }
        for (std::size_t i = 0; i < slots.size(); ++i) {
            if (!slots[i].is_object() || slots[i].value("id", std::string()) != analysis.schema.slots[i].id) {
                problems.push_back("slot " + std::to_string(i) + " should be '" + analysis.schema.slots[i].id + "'");
            }
        }
    }
    if (j.contains("max_per_slot")) {
        if (j["max_per_slot"].is_number_unsigned()) analysis.schema.max_per_slot = j["max_per_slot"].get<std::size_t>();
        else problems.emplace_back("'max_per_slot' must be a positive integer");
    }
    analysis.subject = j.value("subject", std::string());

    for (std::size_t i = 0; i < slots.size(); ++i) {
        const auto& s = slots[i];
        SlotAssignment slot;
        const std::string where = "slots[" + std::to_string(i) + "]";
        for (const char* key : {"factors", "overflow"}) {
            if (!s.is_object() || !s.contains(key)) continue;
            if (!s[key].is_array()) {
                problems.push_back(where + "." + key + " must be an array");
                continue;
            }
            auto& list = std::string(key) == "factors" ? slot.factors : slot.overflow;
            for (std::size_t k = 0; k < s[key].size(); ++k) {
                const std::string item_where = where + "." + key + "[" + std::to_string(k) + "]";
                if (auto a = assignment_from_json(s[key][k], item_where, problems)) list.push_back(std::move(*a));
            }
        }
        if (s.is_object() && s.contains("attribute") && s["attribute"].is_object()) {
            const auto& attr = s["attribute"];
            if (attr.contains("risk")) {
                const auto level = attr["risk"].is_string() ? risk_from_string(attr["risk"].get<std::string>())
                                                            : std::nullopt;
                if (level) slot.attribute = *level;
                else problems.push_back(where + ": unknown risk level");
            } else if (attr.contains("score") && attr["score"].is_number()) {
                slot.attribute = AxisScore{attr["score"].get<double>(), attr.value("contributing", std::size_t{0})};
            } else {
                problems.push_back(where + ": unrecognized attribute");
            }
        }
        analysis.slots.push_back(std::move(slot));
    }
    if (j.contains("unplaced") && j["unplaced"].is_array()) {
        for (std::size_t k = 0; k < j["unplaced"].size(); ++k) {
            if (auto insight = insight::insight_from_json(j["unplaced"][k], "unplaced[" + std::to_string(k) + "]", problems)) {
                analysis.unplaced.push_back(std::move(*insight));
            }
        }
    }
    if (problems.size() != before) return std::nullopt;
    return analysis;
}

}  // namespace stratagem::frameworks
