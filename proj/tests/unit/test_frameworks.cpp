#include "stratagem/frameworks.hpp"
#include "stratagem/rules.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace stratagem;
using namespace stratagem::frameworks;
using insight::EvidenceKind;
using nlohmann::json;

namespace {

Insight make(std::string id, Direction direction, double magnitude, std::vector<ThemeTag> themes) {
    Insight i;
    i.id = std::move(id);
    i.statement = "Synthetic insight " + i.id + " about the company for testing purposes.";
    i.direction = direction;
    i.magnitude = magnitude;
    i.themes = std::move(themes);
    i.evidence = {{EvidenceKind::metric_value, {insight::label_ref("x")}, 1.0}};
    return i;
}

std::size_t slot_index(const FrameworkSchema& schema, std::string_view id) {
    for (std::size_t k = 0; k < schema.slots.size(); ++k) {
        if (schema.slots[k].id == id) return k;
    }
    FAIL("no slot " << id);
    return 0;
}

std::vector<Insight> random_insights(std::mt19937& rng, std::size_t n) {
    std::uniform_real_distribution<double> mag(0.01, 1.0);
    std::uniform_int_distribution<int> dir(0, 2);
    std::uniform_int_distribution<std::size_t> theme(0, insight::kThemeCount - 1);
    std::vector<Insight> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(make("r/" + std::to_string(i), static_cast<Direction>(dir(rng)), mag(rng),
                           {insight::all_themes()[theme(rng)]}));
    }
    return out;
}

std::set<std::string> all_ids(const OrganizedAnalysis& a) {
    std::set<std::string> ids;
    for (const auto& s : a.slots) {
        for (const auto& f : s.factors) ids.insert(f.insight.id);
        for (const auto& f : s.overflow) ids.insert(f.insight.id);
    }
    for (const auto& u : a.unplaced) ids.insert(u.id);
    return ids;
}

}  // namespace

TEST_CASE("built-in schemas") {
    const auto swot = schema_for(FrameworkKind::swot);
    REQUIRE(swot.slots.size() == 4);
    CHECK(swot.slots[0].id == "strengths");
    CHECK(swot.slots[1].id == "weaknesses");
    CHECK(swot.slots[2].id == "opportunities");
    CHECK(swot.slots[3].id == "threats");
    CHECK(swot.layout == Layout::grid);

    const auto porter = schema_for(FrameworkKind::porter5);
    CHECK(porter.slots.size() == 5);
    REQUIRE(porter.central_slot);
    CHECK(porter.slots[*porter.central_slot].id == "rivalry");
    CHECK(porter.layout == Layout::hub_spoke);

    const auto vd = schema_for(FrameworkKind::value_discipline);
    CHECK(vd.slots.size() == 3);
    CHECK(vd.layout == Layout::radar);

    const auto cycle = schema_for(FrameworkKind::virtuous_cycle);
    CHECK(cycle.slots.size() == 4);
    CHECK(cycle.slots.front().id == "invest");
    CHECK(cycle.layout == Layout::cycle);

    for (auto kind : {FrameworkKind::swot, FrameworkKind::porter5, FrameworkKind::virtuous_cycle,
                      FrameworkKind::value_discipline}) {
        CHECK(check_schema(schema_for(kind)).empty());
    }
    CHECK_THROWS_AS(schema_for(FrameworkKind::custom), FrameworkError);
    CHECK(kind_from_string("value-discipline") == FrameworkKind::value_discipline);
    CHECK(kind_from_string("cycle") == FrameworkKind::virtuous_cycle);
    CHECK_FALSE(kind_from_string("bcg"));
}

TEST_CASE("classify_insight follows the affinity tables") {
    const auto swot = schema_for(FrameworkKind::swot);
    const auto pos = classify_insight(make("a", Direction::positive, 0.5, {ThemeTag::market_presence}), swot);
    CHECK(pos[slot_index(swot, "strengths")] == 1.0);
    CHECK(pos[slot_index(swot, "weaknesses")] == 0.0);

    const auto online = classify_insight(make("b", Direction::negative, 0.5, {ThemeTag::online_channel}), swot);
    CHECK(std::max_element(online.begin(), online.end()) - online.begin() == slot_index(swot, "weaknesses"));

    const auto porter = schema_for(FrameworkKind::porter5);
    const auto comp = classify_insight(make("c", Direction::negative, 0.5, {ThemeTag::competition}), porter);
    CHECK(std::max_element(comp.begin(), comp.end()) - comp.begin() == slot_index(porter, "rivalry"));
    for (double f : comp) CHECK((f >= 0.0 && f <= 1.0));
}

TEST_CASE("organize the Foobar insights into SWOT") {
    const auto ds = ingest::parse_table(test_support::read_fixture("foobar.tsv"), ingest::Dialect::tab);
    const auto insights = insight::run_all_rules(ds, std::nullopt, "Foobar Corp");
    const auto swot = schema_for(FrameworkKind::swot);
    const auto a = organize(insights, swot, "Foobar Corp");
    CHECK(validate_analysis(a).empty());

    auto slot_has = [&](std::string_view slot, ThemeTag theme) {
        const auto& s = a.slots[slot_index(swot, slot)];
        for (const auto* list : {&s.factors, &s.overflow}) {
            for (const auto& f : *list) {
                if (std::count(f.insight.themes.begin(), f.insight.themes.end(), theme)) return true;
            }
        }
        return false;
    };
    CHECK(slot_has("strengths", ThemeTag::brand_marketing));
    CHECK(slot_has("weaknesses", ThemeTag::online_channel));
    CHECK(slot_has("weaknesses", ThemeTag::market_presence));
    CHECK(all_ids(a).size() == insights.size());
}

TEST_CASE("empty input gives empty but valid analyses") {
    for (auto kind : {FrameworkKind::swot, FrameworkKind::porter5, FrameworkKind::virtuous_cycle,
                      FrameworkKind::value_discipline}) {
        const auto a = organize({}, schema_for(kind));
        CHECK(validate_analysis(a).empty());
        for (const auto& s : a.slots) CHECK(s.factors.empty());
    }
}

TEST_CASE("truncation keeps the top four by fit times magnitude") {
    const auto swot = schema_for(FrameworkKind::swot);
    std::vector<Insight> strong;
    const double mags[] = {0.2, 0.9, 0.5, 0.7, 0.1, 0.8, 0.3, 0.6, 0.4};
    for (int i = 0; i < 9; ++i) strong.push_back(make("s/" + std::to_string(i), Direction::positive, mags[i], {ThemeTag::brand_marketing}));
    const auto a = organize(strong, swot);
    const auto& slot = a.slots[slot_index(swot, "strengths")];
    REQUIRE(slot.factors.size() == 4);
    CHECK(slot.overflow.size() == 5);
    // Oracle: sort magnitudes (fit is 1.0 for all) and take the first four.
    std::vector<double> sorted(std::begin(mags), std::end(mags));
    std::sort(sorted.rbegin(), sorted.rend());
    for (std::size_t k = 0; k < 4; ++k) CHECK(slot.factors[k].insight.magnitude == sorted[k]);
    for (const auto& o : slot.overflow) CHECK(o.fit * o.insight.magnitude <= slot.factors.back().fit * slot.factors.back().insight.magnitude);
    CHECK(all_ids(a).size() == 9);
}

TEST_CASE("organize properties over random inputs") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const auto kind = static_cast<FrameworkKind>(trial % 4);
        const auto schema = schema_for(kind);
        const auto insights = random_insights(rng, 1 + trial % 17);
        const auto a = organize(insights, schema);
        REQUIRE(validate_analysis(a).empty());
        CHECK(all_ids(a).size() == insights.size());

        // Scaling every magnitude leaves membership and order alone.
        auto scaled = insights;
        for (auto& i : scaled) i.magnitude *= 0.5;
        const auto b = organize(scaled, schema);
        for (std::size_t k = 0; k < a.slots.size(); ++k) {
            REQUIRE(a.slots[k].factors.size() == b.slots[k].factors.size());
            for (std::size_t f = 0; f < a.slots[k].factors.size(); ++f) {
                CHECK(a.slots[k].factors[f].insight.id == b.slots[k].factors[f].insight.id);
            }
        }
    }
}

TEST_CASE("risk levels") {
    CHECK(assign_risk({}) == RiskLevel::low);
    const std::vector<Assignment> two{{make("a", Direction::negative, 0.9, {ThemeTag::competition}), 1.0},
                                      {make("b", Direction::negative, 0.8, {ThemeTag::competition}), 1.0}};
    CHECK(assign_risk(two) == RiskLevel::intense);
    const std::vector<Assignment> one{{make("c", Direction::negative, 0.3, {ThemeTag::competition}), 1.0}};
    CHECK(assign_risk(one) == RiskLevel::moderate);
    CHECK(risk_from_score(0.2) == RiskLevel::low);
    CHECK(risk_from_score(0.6) == RiskLevel::high);
    CHECK(RiskLevel::low < RiskLevel::moderate);
    CHECK(RiskLevel::high < RiskLevel::intense);
}

TEST_CASE("adding a negative insight never lowers risk") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Assignment> slot;
        const int n = trial % 6;
        for (int i = 0; i < n; ++i) {
            slot.push_back({make("x" + std::to_string(i), static_cast<Direction>(trial % 3), u(rng), {ThemeTag::cost}), u(rng)});
        }
        const auto before = assign_risk(slot);
        const double score_before = risk_score(slot);
        slot.push_back({make("new", Direction::negative, u(rng), {ThemeTag::cost}), u(rng)});
        REQUIRE(assign_risk(slot) >= before);
        REQUIRE(risk_score(slot) >= score_before);
    }
}

TEST_CASE("axis scores") {
    CHECK(score_axis({}).value == 5.0);
    CHECK(logistic_score(0.0) == 5.0);
    CHECK(logistic_score(1.0) == doctest::Approx(10.0 / (1.0 + std::exp(-1.0))));
    CHECK(std::abs(logistic_score(1.0) - 7.311) <= 0.001);
    CHECK(std::abs(logistic_score(-1.0) - 2.689) <= 0.001);
    for (double raw = -1000; raw <= 1000; raw += 0.5) CHECK((logistic_score(raw) > 0.0 && logistic_score(raw) < 10.0));
    // Strictly increasing wherever doubles can resolve the step.
    for (double raw = -30; raw < 30; raw += 0.5) CHECK(logistic_score(raw + 0.5) > logistic_score(raw));
    const std::vector<Assignment> mixed{{make("a", Direction::positive, 0.8, {ThemeTag::cost}), 0.5},
                                        {make("b", Direction::negative, 0.5, {ThemeTag::cost}), 1.0},
                                        {make("c", Direction::neutral, 0.9, {ThemeTag::cost}), 1.0}};
    CHECK(axis_raw(mixed) == doctest::Approx(0.8 * 0.5 - 0.5));
    CHECK(score_axis(mixed).contributing == 3);
}

TEST_CASE("value discipline analysis carries scores in (0,10)") {
    const auto ds = ingest::parse_table(test_support::read_fixture("foobar.tsv"), ingest::Dialect::tab);
    const auto a = organize(insight::run_all_rules(ds, std::nullopt, "Foobar Corp"),
                            schema_for(FrameworkKind::value_discipline), "Foobar Corp");
    for (const auto& s : a.slots) {
        const auto* score = std::get_if<AxisScore>(&s.attribute);
        REQUIRE(score);
        CHECK((score->value > 0.0 && score->value < 10.0));
        std::vector<Assignment> all = s.factors;
        all.insert(all.end(), s.overflow.begin(), s.overflow.end());
        double raw = 0.0;
        for (const auto& f : all) raw += f.fit * f.insight.magnitude * insight::sign(f.insight.direction);
        CHECK(score->value == doctest::Approx(10.0 / (1.0 + std::exp(-raw))));
    }
}

TEST_CASE("validate_analysis flags broken analyses") {
    const auto swot = schema_for(FrameworkKind::swot);
    std::vector<Insight> six;
    for (int i = 0; i < 6; ++i) six.push_back(make("s" + std::to_string(i), Direction::positive, 0.5, {ThemeTag::brand_marketing}));
    auto a = organize(six, swot);
    auto& slot = a.slots[slot_index(swot, "strengths")];
    slot.factors.insert(slot.factors.end(), slot.overflow.begin(), slot.overflow.end());
    slot.overflow.clear();
    const auto overflow = validate_analysis(a);
    REQUIRE(overflow.size() == 1);
    CHECK(overflow[0].kind == Violation::Kind::slot_overflow);
    CHECK(to_string(overflow[0].kind) == "SlotOverflow");

    auto porter = organize({}, schema_for(FrameworkKind::porter5));
    porter.slots[2].attribute = std::monostate{};
    const auto missing = validate_analysis(porter);
    REQUIRE(missing.size() == 1);
    CHECK(missing[0].kind == Violation::Kind::missing_attribute);
}

TEST_CASE("analysis JSON round-trips") {
    const auto ds = ingest::parse_table(test_support::read_fixture("foobar.tsv"), ingest::Dialect::tab);
    const auto insights = insight::run_all_rules(ds, std::nullopt, "Foobar Corp");
    for (auto kind : {FrameworkKind::swot, FrameworkKind::porter5, FrameworkKind::virtuous_cycle,
                      FrameworkKind::value_discipline}) {
        const auto a = organize(insights, schema_for(kind), "Foobar Corp");
        const auto text = to_json(a).dump();
        std::vector<std::string> problems;
        const auto back = analysis_from_json(json::parse(text), problems);
        REQUIRE(back);
        CHECK(problems.empty());
        CHECK(back->subject == a.subject);
        CHECK(back->slots == a.slots);
        CHECK(back->unplaced == a.unplaced);
        CHECK(to_json(*back).dump() == text);
    }
    std::vector<std::string> problems;
    CHECK_FALSE(analysis_from_json(json::parse(R"({"schema_kind": "nope"})"), problems));
    CHECK_FALSE(problems.empty());
}

TEST_CASE("custom schemas load from JSON") {
    const auto j = json::parse(R"({
        "name": "BCG Matrix", "layout": "grid",
        "slots": [
            {"id": "stars", "title": "Stars", "affinity": [{"theme": "growth", "direction": "positive", "weight": 1.0}]},
            {"id": "dogs", "title": "Dogs", "affinity": [{"theme": "growth", "direction": "negative", "weight": 1.0}]}
        ]})");
    const auto schema = load_custom_schema(j);
    CHECK(schema.kind == FrameworkKind::custom);
    CHECK(schema.slots.size() == 2);
    const auto a = organize({make("g", Direction::negative, 0.4, {ThemeTag::growth})}, schema);
    CHECK(a.slots[1].factors.size() == 1);

    CHECK_THROWS_AS(load_custom_schema(json::parse(R"({"name": "x", "slots": []})")), FrameworkError);
    CHECK_THROWS_AS(load_custom_schema(json::parse(
                        R"({"name": "x", "slots": [{"id": "a", "title": "A", "affinity": [{"theme": "nope", "direction": "positive", "weight": 1}]}]})")),
                    FrameworkError);
}
