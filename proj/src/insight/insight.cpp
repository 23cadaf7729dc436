#include "stratagem/insight.hpp"

#include "text_util.hpp"

#include <array>
#include <cmath>
#include <set>

namespace stratagem::insight {

using detail::lower;

namespace {

struct ThemeKeywords {
    ThemeTag tag;
    std::string_view name;
    std::array<std::string_view, 12> keywords;
};

// Substring match on lower-cased text; empty slots are ignored.
const std::array<ThemeKeywords, kThemeCount> kThemeTable{{
    {ThemeTag::market_presence, "market-presence",
     {"countries", "country", "stores", "store", "presence", "physical", "global", "international", "locations",
      "footprint", "geographic", ""}},
    {ThemeTag::online_channel, "online-channel",
     {"online", "e-commerce", "ecommerce", "digital", "internet", "web ", "", "", "", "", "", ""}},
    {ThemeTag::brand_marketing, "brand-marketing",
     {"brand", "awareness", "media spend", "marketing", "advertis", "", "", "", "", "", "", ""}},
    {ThemeTag::supply_chain, "supply-chain",
     {"shipment", "supply", "logistic", "inventory", "delivery", "delay", "distribution", "", "", "", "", ""}},
    {ThemeTag::profitability, "profitability",
     {"margin", "profit", "net income", "operating income", "earnings", "ebt", "", "", "", "", "", ""}},
    {ThemeTag::product_diversity, "product-diversity",
     {"product", "categories", "portfolio", "diverse", "diversity", "assortment", "range of", "", "", "", "", ""}},
    {ThemeTag::public_sentiment, "public-sentiment",
     {"sentiment", "perception", "reputation", "publicity", "public ", "labor practices", "", "", "", "", "", ""}},
    {ThemeTag::growth, "growth",
     {"growth", "grow", "expansion", "expand", "increase", "revenue", "", "", "", "", "", ""}},
    {ThemeTag::competition, "competition",
     {"competition", "competitor", "competitive", "rival", "market share", "", "", "", "", "", "", ""}},
    {ThemeTag::cost, "cost", {"cost", "expense", "commodity", "", "", "", "", "", "", "", "", ""}},
}};

bool finite_in_unit(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace

std::string_view to_string(ThemeTag tag) { return kThemeTable[static_cast<std::size_t>(tag)].name; }

std::optional<ThemeTag> theme_from_string(std::string_view text) {
    for (const auto& entry : kThemeTable) {
        if (entry.name == text) return entry.tag;
    }
    return std::nullopt;
}

const std::vector<ThemeTag>& all_themes() {
    static const std::vector<ThemeTag> themes = [] {
        std::vector<ThemeTag> out;
        for (const auto& entry : kThemeTable) out.push_back(entry.tag);
        return out;
    }();
    return themes;
}

std::vector<ThemeTag> themes_for_text(std::string_view text) {
    const std::string key = lower(text) + " ";
    std::vector<ThemeTag> found;
    for (const auto& entry : kThemeTable) {
        for (auto keyword : entry.keywords) {
            if (!keyword.empty() && key.find(keyword) != std::string::npos) {
                found.push_back(entry.tag);
                break;
            }
        }
    }
    return found;
}

std::string_view to_string(Direction direction) {
    switch (direction) {
        case Direction::positive: return "positive";
        case Direction::negative: return "negative";
        case Direction::neutral: return "neutral";
    }
    return "neutral";
}

std::optional<Direction> direction_from_string(std::string_view text) {
    if (text == "positive") return Direction::positive;
    if (text == "negative") return Direction::negative;
    if (text == "neutral") return Direction::neutral;
    return std::nullopt;
}

int sign(Direction direction) {
    switch (direction) {
        case Direction::positive: return 1;
        case Direction::negative: return -1;
        case Direction::neutral: return 0;
    }
    return 0;
}

std::string_view to_string(EvidenceKind kind) {
    switch (kind) {
        case EvidenceKind::metric_value: return "metric-value";
        case EvidenceKind::computed_ratio: return "computed-ratio";
        case EvidenceKind::trend_slope: return "trend-slope";
        case EvidenceKind::rank: return "rank";
        case EvidenceKind::cycle_stat: return "cycle-stat";
    }
    return "metric-value";
}

std::optional<EvidenceKind> evidence_kind_from_string(std::string_view text) {
    for (auto kind : {EvidenceKind::metric_value, EvidenceKind::computed_ratio, EvidenceKind::trend_slope,
                      EvidenceKind::rank, EvidenceKind::cycle_stat}) {
        if (to_string(kind) == text) return kind;
    }
    return std::nullopt;
}

Ref metric_ref(std::string name) { return {Ref::Kind::metric, std::move(name)}; }
Ref entity_ref(std::string name) { return {Ref::Kind::entity, std::move(name)}; }
Ref date_ref(std::string name) { return {Ref::Kind::date, std::move(name)}; }
Ref label_ref(std::string name) { return {Ref::Kind::label, std::move(name)}; }

namespace {

std::string_view to_string(Ref::Kind kind) {
    switch (kind) {
        case Ref::Kind::metric: return "metric";
        case Ref::Kind::entity: return "entity";
        case Ref::Kind::date: return "date";
        case Ref::Kind::label: return "label";
    }
    return "label";
}

std::optional<Ref::Kind> ref_kind_from_string(std::string_view text) {
    for (auto kind : {Ref::Kind::metric, Ref::Kind::entity, Ref::Kind::date, Ref::Kind::label}) {
        if (to_string(kind) == text) return kind;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(RuleId rule) {
    switch (rule) {
        case RuleId::trend: return "trend";
        case RuleId::peer_comparison: return "peer_comparison";
        case RuleId::ratio_share: return "ratio_share";
        case RuleId::sentiment_balance: return "sentiment_balance";
        case RuleId::sentiment_contrast: return "sentiment_contrast";
        case RuleId::weekly_cycle: return "weekly_cycle";
        case RuleId::benchmark_surprise: return "benchmark_surprise";
    }
    return "trend";
}

std::optional<RuleId> rule_from_string(std::string_view text) {
    for (auto rule : {RuleId::trend, RuleId::peer_comparison, RuleId::ratio_share, RuleId::sentiment_balance,
                      RuleId::sentiment_contrast, RuleId::weekly_cycle, RuleId::benchmark_surprise}) {
        if (to_string(rule) == text) return rule;
    }
    return std::nullopt;
}

std::vector<std::string> check_insight(const Insight& insight) {
    std::vector<std::string> problems;
    if (insight.id.empty()) problems.emplace_back("id is empty");
    if (!finite_in_unit(insight.magnitude)) problems.emplace_back("magnitude outside [0,1]");
    const auto words = detail::word_count(insight.statement);
    if (words < kMinStatementWords || words > kMaxStatementWords) {
        problems.push_back("statement has " + std::to_string(words) + " words, expected 5..40");
    }
    std::set<ThemeTag> seen(insight.themes.begin(), insight.themes.end());
    if (seen.size() != insight.themes.size()) problems.emplace_back("duplicate theme tag");
    if (std::holds_alternative<RuleProvenance>(insight.provenance) && insight.evidence.empty()) {
        problems.emplace_back("rule insight without evidence");
    }
    for (const auto& e : insight.evidence) {
        if (!std::isfinite(e.value)) problems.emplace_back("non-finite evidence value");
    }
    return problems;
}

std::optional<std::string> fit_statement(std::string_view text) {
    auto words = detail::split_words(text);
    if (words.size() < kMinStatementWords) return std::nullopt;
    if (words.size() > kMaxStatementWords) {
        std::size_t cut = 0;
        for (std::size_t i = kMinStatementWords - 1; i < kMaxStatementWords; ++i) {
            const char last = words[i].back();
            if (last == '.' || last == '!' || last == '?') cut = i + 1;
        }
        if (cut == 0) {
            cut = kMaxStatementWords;
            words[cut - 1] += "…";
        }
        words.resize(cut);
    }
    return detail::join(words, " ");
}

nlohmann::ordered_json to_json(const Insight& insight) {
    nlohmann::ordered_json j;
    j["id"] = insight.id;
    j["statement"] = insight.statement;
    j["direction"] = to_string(insight.direction);
    j["magnitude"] = insight.magnitude;
    auto& themes = j["themes"] = nlohmann::ordered_json::array();
    for (auto t : insight.themes) themes.push_back(to_string(t));
    auto& evidence = j["evidence"] = nlohmann::ordered_json::array();
    for (const auto& e : insight.evidence) {
        nlohmann::ordered_json item;
        item["kind"] = to_string(e.kind);
        auto& refs = item["refs"] = nlohmann::ordered_json::array();
        for (const auto& r : e.refs) refs.push_back({{std::string(to_string(r.kind)), r.name}});
        item["value"] = e.value;
        evidence.push_back(std::move(item));
    }
    if (const auto* rule = std::get_if<RuleProvenance>(&insight.provenance)) {
        j["provenance"] = {{"rule", to_string(rule->rule)}};
    } else {
        j["provenance"] = {{"llm", std::get<LlmProvenance>(insight.provenance).model}};
    }
    return j;
}

nlohmann::ordered_json to_json(const std::vector<Insight>& insights) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& i : insights) arr.push_back(to_json(i));
    return arr;
}

nlohmann::ordered_json to_json(const InsightSet& set) {
    nlohmann::ordered_json j;
    j["subject"] = set.subject;
    j["insights"] = to_json(set.insights);
    return j;
}

std::optional<Insight> insight_from_json(const nlohmann::json& j, const std::string& where,
                                         std::vector<std::string>& violations) {
    const auto before = violations.size();
    auto fail = [&](const std::string& message) { violations.push_back(where + ": " + message); };
    if (!j.is_object()) {
        fail("expected an object");
        return std::nullopt;
    }
    Insight insight;
    auto string_field = [&](const char* key, std::string& out) {
        if (!j.contains(key) || !j[key].is_string()) {
            fail(std::string("missing or non-string '") + key + "'");
            return;
        }
        out = j[key].get<std::string>();
    };
    string_field("id", insight.id);
    string_field("statement", insight.statement);

    std::string direction;
    string_field("direction", direction);
    if (!direction.empty()) {
        if (auto d = direction_from_string(direction)) insight.direction = *d;
        else fail("unknown direction '" + direction + "'");
    }
    if (!j.contains("magnitude") || !j["magnitude"].is_number()) {
        fail("missing or non-numeric 'magnitude'");
    } else {
        insight.magnitude = j["magnitude"].get<double>();
    }

    if (!j.contains("themes") || !j["themes"].is_array()) {
        fail("missing 'themes' array");
    } else {
        for (const auto& t : j["themes"]) {
            const auto tag = t.is_string() ? theme_from_string(t.get<std::string>()) : std::nullopt;
            if (tag) insight.themes.push_back(*tag);
            else fail("unknown theme " + t.dump());
        }
    }

    if (!j.contains("evidence") || !j["evidence"].is_array()) {
        fail("missing 'evidence' array");
    } else {
        for (const auto& e : j["evidence"]) {
            Evidence evidence;
            const auto kind = e.contains("kind") && e["kind"].is_string()
                                  ? evidence_kind_from_string(e["kind"].get<std::string>())
                                  : std::nullopt;
            if (!kind) {
                fail("evidence with unknown kind");
                continue;
            }
            evidence.kind = *kind;
            if (!e.contains("value") || !e["value"].is_number()) {
                fail("evidence without numeric value");
                continue;
            }
            evidence.value = e["value"].get<double>();
            if (e.contains("refs") && e["refs"].is_array()) {
                for (const auto& r : e["refs"]) {
                    if (!r.is_object() || r.size() != 1 || !r.begin().value().is_string()) {
                        fail("malformed evidence ref " + r.dump());
                        continue;
                    }
                    const auto ref_kind = ref_kind_from_string(r.begin().key());
                    if (!ref_kind) {
                        fail("unknown evidence ref kind '" + r.begin().key() + "'");
                        continue;
                    }
                    evidence.refs.push_back({*ref_kind, r.begin().value().get<std::string>()});
                }
            }
            insight.evidence.push_back(std::move(evidence));
        }
    }

    if (!j.contains("provenance") || !j["provenance"].is_object()) {
        fail("missing 'provenance' object");
    } else {
        const auto& p = j["provenance"];
        if (p.contains("rule") && p["rule"].is_string()) {
            if (auto rule = rule_from_string(p["rule"].get<std::string>())) insight.provenance = RuleProvenance{*rule};
            else fail("unknown rule '" + p["rule"].get<std::string>() + "'");
        } else if (p.contains("llm") && p["llm"].is_string()) {
            insight.provenance = LlmProvenance{p["llm"].get<std::string>()};
        } else {
            fail("provenance must carry 'rule' or 'llm'");
        }
    }

    if (violations.size() == before) {
        for (const auto& problem : check_insight(insight)) fail(problem);
    }
    if (violations.size() != before) return std::nullopt;
    return insight;
}

std::optional<InsightSet> insight_set_from_json(const nlohmann::json& j, std::vector<std::string>& violations) {
    const auto before = violations.size();
    InsightSet set;
    const nlohmann::json* items = nullptr;
    if (j.is_array()) {
        items = &j;
    } else if (j.is_object()) {
        if (j.contains("subject")) {
            if (j["subject"].is_string()) set.subject = j["subject"].get<std::string>();
            else violations.emplace_back("'subject' must be a string");
        }
        if (j.contains("insights") && j["insights"].is_array()) items = &j["insights"];
        else violations.emplace_back("missing 'insights' array");
    } else {
        violations.emplace_back("insights document must be an object or an array");
    }
    if (items) {
        std::set<std::string> ids;
        for (std::size_t i = 0; i < items->size(); ++i) {
            const std::string where = "insights[" + std::to_string(i) + "]";
            if (auto insight = insight_from_json((*items)[i], where, violations)) {
                if (!ids.insert(insight->id).second) {
                    violations.push_back(where + ": duplicate id '" + insight->id + "'");
                }
                set.insights.push_back(std::move(*insight));
            }
        }
    }
    if (violations.size() != before) return std::nullopt;
    return set;
}

}  // namespace stratagem::insight
