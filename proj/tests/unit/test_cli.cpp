#include "stratagem/cli.hpp"
#include "stratagem/frameworks.hpp"
#include "stratagem/ingest.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <cstdlib>
#include <regex>
#include <set>
#include <sstream>
#include <sys/wait.h>

using nlohmann::json;
using test_support::fixture;
using test_support::read_file;
using test_support::TempDir;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = stratagem::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::set<std::string> themes_of(const json& set) {
    std::set<std::string> themes;
    for (const auto& i : set["insights"]) {
        for (const auto& t : i["themes"]) themes.insert(t.get<std::string>());
    }
    return themes;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = haystack.find(needle); p != std::string::npos; p = haystack.find(needle, p + 1)) ++n;
    return n;
}

int direction_sign(const std::string& d) { return d == "positive" ? 1 : d == "negative" ? -1 : 0; }

std::vector<std::pair<double, double>> polygon_points(const std::string& svg, const std::string& fill) {
    const std::regex re("<polygon points=\"([^\"]*)\" fill=\"" + fill + "\"");
    std::smatch m;
    REQUIRE(std::regex_search(svg, m, re));
    std::vector<std::pair<double, double>> pts;
    std::istringstream in(m[1].str());
    for (std::string pair; in >> pair;) {
        const auto comma = pair.find(',');
        pts.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
    }
    return pts;
}

}  // namespace

TEST_CASE("insights from the Foobar table") {
    TempDir dir("cli-insights");
    const auto r = run({"insights", "--table", fixture("foobar.tsv"), "--subject", "Foobar Corp", "-o", dir.file("i.json")});
    REQUIRE(r.code == 0);
    const auto set = json::parse(read_file(dir.file("i.json")));
    CHECK(set["subject"] == "Foobar Corp");
    CHECK(set["insights"].size() >= 5);
    CHECK(themes_of(set).size() >= 4);

    // Without -o the JSON goes to stdout.
    const auto to_stdout = run({"insights", "--table", fixture("foobar.tsv"), "--subject", "Foobar Corp"});
    CHECK(to_stdout.out == read_file(dir.file("i.json")));
}

TEST_CASE("insights input errors exit 2") {
    const auto none = run({"insights", "--subject", "Foobar Corp"});
    CHECK(none.code == 2);
    CHECK(none.err.find("nothing to analyse") != std::string::npos);

    TempDir dir("cli-bad");
    test_support::write_file(dir.file("ragged.tsv"), "Metric\tA\tB\nRevenue\t1\t2\nStores\t3\n");
    const auto ragged = run({"insights", "--table", dir.file("ragged.tsv"), "--subject", "A"});
    CHECK(ragged.code == 2);
    CHECK(ragged.err.find(dir.file("ragged.tsv") + ":3:") != std::string::npos);

    CHECK(run({"insights", "--table", dir.file("missing.tsv"), "--subject", "A"}).code == 2);
    CHECK(run({"insights", "--subject", "A", "--llm", "bogus:x"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"--help"}).code == 0);
}

TEST_CASE("training-data insights replay without a network") {
    const auto r = run({"insights", "--subject", "Walmart", "--llm", "replay:" + fixture("walmart.jsonl")});
    REQUIRE(r.code == 0);
    const auto set = json::parse(r.out);
    REQUIRE(set["insights"].size() == 7);
    CHECK(set["insights"][0]["provenance"]["llm"] == "chatgpt");

    const auto miss = run({"insights", "--subject", "Target", "--llm", "replay:" + fixture("walmart.jsonl")});
    CHECK(miss.code == 3);
    CHECK(miss.err.find("ReplayMiss") != std::string::npos);
}

TEST_CASE("rule and LLM insights merge with exact-duplicate removal") {
    TempDir dir("cli-merge");
    const auto rules = json::parse(run({"insights", "--table", fixture("foobar.tsv"), "--subject", "Foobar Corp"}).out);
    const std::string duplicate = rules["insights"][0]["statement"];

    // Record a tabular response by hand; the binding is the canonical table text.
    const auto table = stratagem::ingest::parse_table(test_support::read_fixture("foobar.tsv"), stratagem::ingest::Dialect::tab);
    test_support::write_file(dir.file("block.tsv"), stratagem::ingest::write_table(table));
    test_support::write_file(dir.file("reply.md"), "- " + duplicate +
                                                       "\n- Foobar Corp should invest in its online store to catch up with peers.\n");
    const auto add = run({"transcript", "add", "--transcript", dir.file("t.jsonl"), "--template", "insights_tabular",
                          "--bind", "company=Foobar Corp", "--bind-file", "data_block=" + dir.file("block.tsv"),
                          "--response", dir.file("reply.md"), "--model", "gpt", "--timestamp", "2024-01-01T00:00:00Z"});
    REQUIRE(add.code == 0);
    CHECK(add.out.size() == 65);  // 64 hex digits and a newline

    const auto merged = run({"insights", "--table", fixture("foobar.tsv"), "--subject", "Foobar Corp", "--llm",
                             "replay:" + dir.file("t.jsonl")});
    REQUIRE(merged.code == 0);
    const auto set = json::parse(merged.out);
    CHECK(set["insights"].size() == rules["insights"].size() + 1);
    for (std::size_t k = 0; k < rules["insights"].size(); ++k) CHECK(set["insights"][k] == rules["insights"][k]);
    CHECK(set["insights"].back()["statement"].get<std::string>().find("online store") != std::string::npos);
}

TEST_CASE("organize") {
    TempDir dir("cli-organize");
    REQUIRE(run({"insights", "--table", fixture("foobar.tsv"), "--subject", "Foobar Corp", "-o", dir.file("i.json")}).code == 0);

    SUBCASE("swot") {
        const auto r = run({"organize", "--insights", dir.file("i.json"), "--framework", "swot", "-o", dir.file("a.json")});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("strengths:") != std::string::npos);
        const auto a = json::parse(read_file(dir.file("a.json")));
        CHECK(a["slots"].size() == 4);
        CHECK(a["subject"] == "Foobar Corp");
        std::vector<std::string> problems;
        const auto parsed = stratagem::frameworks::analysis_from_json(a, problems);
        REQUIRE(parsed);
        CHECK(problems.empty());
        CHECK(stratagem::frameworks::validate_analysis(*parsed).empty());
    }
    SUBCASE("value discipline scores follow the logistic of the signed evidence sum") {
        REQUIRE(run({"organize", "--insights", dir.file("i.json"), "--framework", "value-discipline", "-o",
                     dir.file("v.json")}).code == 0);
        const auto a = json::parse(read_file(dir.file("v.json")));
        REQUIRE(a["slots"].size() == 3);
        for (const auto& slot : a["slots"]) {
            double raw = 0.0;
            for (const char* list : {"factors", "overflow"}) {
                if (!slot.contains(list)) continue;
                for (const auto& f : slot[list]) {
                    raw += f["fit"].get<double>() * f["magnitude"].get<double>() * direction_sign(f["direction"]);
                }
            }
            const double score = slot["attribute"]["score"];
            CHECK(score > 0.0);
            CHECK(score < 10.0);
            CHECK(score == doctest::Approx(10.0 / (1.0 + std::exp(-raw))).epsilon(1e-12));
        }
    }
    SUBCASE("max-per-slot") {
        const auto r = run({"organize", "--insights", dir.file("i.json"), "--framework", "porter5", "--max-per-slot", "1"});
        REQUIRE(r.code == 0);
        for (const auto& slot : json::parse(r.out)["slots"]) CHECK(slot["factors"].size() <= 1);
    }
    SUBCASE("malformed insights list every violation") {
        test_support::write_file(dir.file("bad.json"),
                                 R"({"subject": "X", "insights": [{"id": "a"}, {"statement": "too short"}]})");
        const auto r = run({"organize", "--insights", dir.file("bad.json")});
        CHECK(r.code == 2);
        CHECK(count(r.err, "insights[0]") >= 5);
        CHECK(count(r.err, "insights[1]") >= 5);
    }
    SUBCASE("unknown framework") {
        CHECK(run({"organize", "--insights", dir.file("i.json"), "--framework", "bcg"}).code == 2);
    }
    SUBCASE("LLM framework assignment") {
        const auto swot = run({"organize", "--subject", "Walmart", "--framework", "swot", "--llm",
                               "replay:" + fixture("walmart.jsonl")});
        REQUIRE(swot.code == 0);
        const auto a = json::parse(swot.out);
        CHECK(a["slots"][0]["factors"][0]["statement"].get<std::string>().find("global presence") != std::string::npos);

        const auto refusal = run({"organize", "--subject", "Foobar Corp", "--framework", "value-discipline", "--llm",
                                  "replay:" + fixture("foobar_llm.jsonl")});
        CHECK(refusal.code == 3);
        CHECK(refusal.err.find("Refusal") != std::string::npos);
    }
}

TEST_CASE("render") {
    TempDir dir("cli-render");
    REQUIRE(run({"insights", "--table", fixture("foobar.tsv"), "--timeseries", fixture("stock_30d.tsv"), "--subject",
                 "Foobar Corp", "-o", dir.file("i.json")}).code == 0);
    auto organize = [&](const std::string& framework) {
        const auto path = dir.file(framework + ".json");
        REQUIRE(run({"organize", "--insights", dir.file("i.json"), "--framework", framework, "-o", path}).code == 0);
        return path;
    };

    SUBCASE("swot grid") {
        const auto r = run({"render", "--analysis", organize("swot"), "-o", dir.file("swot.svg")});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("wrote " + dir.file("swot.svg") + " (960 x 720 px)") != std::string::npos);
        const auto svg = read_file(dir.file("swot.svg"));
        CHECK(count(svg, "<rect") == 5);
        std::istringstream in(svg);
        boost::property_tree::ptree tree;
        CHECK_NOTHROW(boost::property_tree::read_xml(in, tree));
    }
    SUBCASE("value discipline radar") {
        REQUIRE(run({"render", "--analysis", organize("value-discipline"), "-o", dir.file("vd.svg")}).code == 0);
        const auto svg = read_file(dir.file("vd.svg"));
        CHECK(count(svg, "<line ") == 3);
        CHECK(polygon_points(svg, "#9FC5E8").size() == 3);
    }
    SUBCASE("porter with an intense slot") {
        const auto path = organize("porter5");
        const auto a = json::parse(read_file(path));
        std::string intense;
        for (const auto& s : a["slots"]) {
            if (s["attribute"]["risk"] == "intense") intense = s["id"];
        }
        REQUIRE_FALSE(intense.empty());
        const auto r = run({"render", "--analysis", path, "-o", dir.file("p.svg")});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("[SlotOverflow]") != std::string::npos);
        const auto svg = read_file(dir.file("p.svg"));
        CHECK(svg.find("fill=\"#EA9999\"") != std::string::npos);
        CHECK(svg.find("stroke=\"#CC0000\"") != std::string::npos);
    }
    SUBCASE("errors") {
        CHECK(run({"render", "--analysis", dir.file("nope.json"), "-o", dir.file("x.svg")}).code == 2);
        test_support::write_file(dir.file("style.json"), R"({"padding": 1})");
        CHECK(run({"render", "--analysis", organize("swot"), "--style", dir.file("style.json"), "-o", dir.file("x.svg")})
                  .code == 2);
        CHECK(run({"render", "--analysis", organize("swot")}).code == 2);  // -o is required
    }
    SUBCASE("layout overflow exits 4 and names what did not fit") {
        // Long tokens are hyphen-split, so only a style whose minimum size no canvas can hold overflows.
        test_support::write_file(dir.file("giant.json"), R"({"font": {"min": 300, "max": 300, "body_max": 300}})");
        const auto r = run({"render", "--analysis", organize("swot"), "--style", dir.file("giant.json"), "-o",
                            dir.file("giant.svg")});
        CHECK(r.code == 4);
        CHECK(r.err.find("diagram title does not fit") != std::string::npos);
        CHECK_FALSE(std::filesystem::exists(dir.file("giant.svg")));
    }
}

TEST_CASE("pipeline writes intermediates and matches the staged commands") {
    TempDir dir("cli-pipeline");
    const std::vector<std::string> inputs = {"--table", fixture("foobar.tsv"), "--timeseries", fixture("stock_30d.tsv"),
                                             "--subject", "Foobar Corp"};
    for (const std::string framework : {"swot", "porter5", "cycle", "value-discipline"}) {
        CAPTURE(framework);
        auto args = std::vector<std::string>{"pipeline"};
        args.insert(args.end(), inputs.begin(), inputs.end());
        args.insert(args.end(), {"--framework", framework, "-o", dir.file(framework + ".svg")});
        REQUIRE(run(args).code == 0);
        const auto stem = dir.file(framework);
        CHECK(std::filesystem::exists(stem + ".insights.json"));
        CHECK(std::filesystem::exists(stem + ".analysis.json"));

        // Second run: byte-identical artifacts.
        const auto first_svg = read_file(stem + ".svg");
        const auto first_analysis = read_file(stem + ".analysis.json");
        REQUIRE(run(args).code == 0);
        CHECK(read_file(stem + ".svg") == first_svg);
        CHECK(read_file(stem + ".analysis.json") == first_analysis);

        // Staged commands on the same inputs.
        auto insights = std::vector<std::string>{"insights"};
        insights.insert(insights.end(), inputs.begin(), inputs.end());
        insights.insert(insights.end(), {"-o", dir.file("staged.insights.json")});
        REQUIRE(run(insights).code == 0);
        REQUIRE(run({"organize", "--insights", dir.file("staged.insights.json"), "--framework", framework, "-o",
                     dir.file("staged.analysis.json")}).code == 0);
        REQUIRE(run({"render", "--analysis", dir.file("staged.analysis.json"), "-o", dir.file("staged.svg")}).code == 0);
        CHECK(read_file(dir.file("staged.insights.json")) == read_file(stem + ".insights.json"));
        CHECK(read_file(dir.file("staged.analysis.json")) == first_analysis);
        CHECK(read_file(dir.file("staged.svg")) == first_svg);
    }
}

TEST_CASE("value-discipline pipeline radii follow the axis scores") {
    TempDir dir("cli-radar");
    REQUIRE(run({"pipeline", "--table", fixture("foobar.tsv"), "--subject", "Foobar Corp", "--framework",
                 "value-discipline", "-o", dir.file("vd.svg")}).code == 0);
    const auto analysis = json::parse(read_file(dir.file("vd.analysis.json")));
    const auto svg = read_file(dir.file("vd.svg"));

    // Spokes run from the center to the outer ring.
    const std::regex spoke("<line x1=\"([-0-9.]+)\" y1=\"([-0-9.]+)\" x2=\"([-0-9.]+)\" y2=\"([-0-9.]+)\"");
    std::vector<std::array<double, 4>> spokes;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), spoke); it != std::sregex_iterator(); ++it) {
        spokes.push_back({std::stod((*it)[1]), std::stod((*it)[2]), std::stod((*it)[3]), std::stod((*it)[4])});
    }
    REQUIRE(spokes.size() == 3);
    const auto vertices = polygon_points(svg, "#9FC5E8");
    REQUIRE(vertices.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        double raw = 0.0;
        const auto& slot = analysis["slots"][k];
        for (const char* list : {"factors", "overflow"}) {
            if (!slot.contains(list)) continue;
            for (const auto& f : slot[list]) {
                raw += f["fit"].get<double>() * f["magnitude"].get<double>() * direction_sign(f["direction"]);
            }
        }
        const double score = 10.0 / (1.0 + std::exp(-raw));
        const auto& s = spokes[k];
        const double radius = std::hypot(s[2] - s[0], s[3] - s[1]);
        const double distance = std::hypot(vertices[k].first - s[0], vertices[k].second - s[1]);
        const double expected = radius * score / 10.0;
        // Coordinates are printed to 0.01 px, which bounds the comparison from below.
        CHECK(std::abs(distance - expected) <= std::max(0.001 * expected, 0.015));
    }
}

TEST_CASE("pipeline propagates the first failing stage") {
    TempDir dir("cli-fail");
    CHECK(run({"pipeline", "--subject", "Foobar Corp", "-o", dir.file("x.svg")}).code == 2);
    CHECK(run({"pipeline", "--subject", "Target", "--llm", "replay:" + fixture("walmart.jsonl"), "-o",
               dir.file("y.svg")}).code == 3);
    CHECK_FALSE(std::filesystem::exists(dir.file("y.svg")));
}

TEST_CASE("the installed binary honours the exit-code contract") {
    TempDir dir("cli-binary");
    auto status = [](const std::string& command) {
        const int raw = std::system((command + " >/dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    const std::string bin = STRATAGEM_BINARY;
    CHECK(status(bin + " --help") == 0);
    CHECK(status(bin + " insights --subject X") == 2);
    CHECK(status(bin + " insights --subject Target --llm replay:" + fixture("walmart.jsonl")) == 3);
    CHECK(status(bin + " pipeline --table " + fixture("foobar.tsv") + " --subject 'Foobar Corp' -o " +
                 dir.file("b.svg")) == 0);
    CHECK(std::filesystem::exists(dir.file("b.svg")));
}
