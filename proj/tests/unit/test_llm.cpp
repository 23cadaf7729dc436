#include "stratagem/llm.hpp"

#include "test_support.hpp"

#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

using namespace stratagem;
using namespace stratagem::llm;
using test_support::read_fixture;
using test_support::TempDir;

namespace {

LlmError::Kind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const LlmError& e) {
        return e.kind();
    }
    FAIL("expected an LlmError");
    return LlmError::Kind::transport;
}

/// Transport that records calls and answers with a fixed response.
class FakeTransport final : public HttpTransport {
public:
    explicit FakeTransport(HttpResponse response) : response_(std::move(response)) {}
    HttpResponse post(const HttpRequest& request) override {
        requests.push_back(request);
        return response_;
    }
    std::vector<HttpRequest> requests;

private:
    HttpResponse response_;
};

std::string chat_body(const std::string& text) {
    nlohmann::json j;
    j["choices"] = nlohmann::json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}});
    return j.dump();
}

/// Local OpenAI-shaped server on an ephemeral port.
class LocalServer {
public:
    LocalServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            last_auth = req.get_header_value("Authorization");
            last_body = req.body;
            if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            res.status = status;
            res.set_content(status == 200 ? chat_body("- Revenue grew steadily across all regions this year.") : "{}",
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    [[nodiscard]] std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

    int status = 200;
    int delay_ms = 0;
    std::string last_auth;
    std::string last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ProviderConfig live_config(const std::string& endpoint, const std::string& key_env) {
    ProviderConfig c;
    c.endpoint = endpoint;
    c.model = "test-model";
    c.api_key_env = key_env;
    c.mode = Mode::live;
    c.timeout_seconds = 5.0;
    return c;
}

}  // namespace

TEST_CASE("prompt templates render with their bindings") {
    const auto p = render_prompt(TemplateId::framework_analysis, {{"framework", "SWOT"}, {"company", "Walmart"}});
    CHECK(p.text == "Do a SWOT analysis of Walmart");
    CHECK(p.hash == request_hash(TemplateId::framework_analysis, p.bindings));

    const auto t = render_prompt(TemplateId::insights_tabular, {{"company", "Foobar Corp"}, {"data_block", "A\tB\n1\t2"}});
    CHECK(t.text.find("Foobar Corp") < t.text.find("A\tB\n1\t2"));

    CHECK(kind_of([] { (void)render_prompt(TemplateId::framework_analysis, {{"company", "Walmart"}}); }) ==
          LlmError::Kind::missing_binding);
    CHECK(template_from_string("one_shot_diagram") == TemplateId::one_shot_diagram);
    CHECK_FALSE(template_from_string("nope"));
}

TEST_CASE("request hash matches an independent SHA-256 of the canonical form") {
    // Values computed outside this code base over {"bindings":{...},"template":...} with sorted keys.
    CHECK(request_hash(TemplateId::framework_analysis, {{"company", "Walmart"}, {"framework", "SWOT"}}) ==
          "48bcf85517560b945eb312b7d95e002daaa63fe508031902916cfb4f652aaa30");
    CHECK(request_hash(TemplateId::trend_training_data, {{"company", "Walmart"}}) ==
          "b7e0b0ae2fecb40a5b0aa3c3f2485f59c6a1335a5ea2326eb4823dab1f77f491");
    // Whitespace runs collapse before hashing.
    CHECK(request_hash(TemplateId::insights_tabular, {{"company", "Foobar   Corp"}, {"data_block", " a  b\tc\n"}}) ==
          "89b9b3060bbc13cd8f777e1af8a7ee209d124a9897b65b103c90371b8abdc347");
    CHECK(request_hash(TemplateId::framework_analysis, {{"company", "Walmart"}, {"framework", "SWOT"}}) !=
          request_hash(TemplateId::one_shot_diagram, {{"company", "Walmart"}, {"framework", "SWOT"}}));
}

TEST_CASE("transcripts upsert by hash and reject duplicates") {
    TempDir dir("transcript");
    const auto path = dir.file("t.jsonl");
    {
        Transcript t(path);
        CHECK(t.records().empty());
        t.upsert({"h1", "m", "req1", "resp1", "2024-01-01T00:00:00Z"});
        t.upsert({"h2", "m", "req2", "resp2", "2024-01-01T00:00:00Z"});
        t.upsert({"h1", "m", "req1", "resp1b", "2024-01-02T00:00:00Z"});
    }
    const Transcript reread(path);
    REQUIRE(reread.records().size() == 2);
    REQUIRE(reread.find("h1"));
    CHECK(reread.find("h1")->response == "resp1b");
    CHECK_FALSE(reread.find("h3"));

    const auto line = to_json(reread.records()[0]).dump();
    test_support::write_file(dir.file("dup.jsonl"), line + "\n" + line + "\n");
    CHECK(kind_of([&] { Transcript bad(dir.file("dup.jsonl")); }) == LlmError::Kind::transcript);
    test_support::write_file(dir.file("junk.jsonl"), "{not json\n");
    CHECK(kind_of([&] { Transcript bad(dir.file("junk.jsonl")); }) == LlmError::Kind::transcript);
}

TEST_CASE("replay mode serves recorded responses without a network") {
    ProviderConfig c;
    c.mode = Mode::replay;
    c.transcript = test_support::fixture("walmart.jsonl");
    auto transport = std::make_shared<FakeTransport>(HttpResponse{500, ""});
    Client client(c, transport);

    const auto hit = client.complete(render_prompt(TemplateId::trend_training_data, {{"company", "Walmart"}}));
    CHECK(hit.model == "chatgpt");
    CHECK(hit.text.find("Walmart") != std::string::npos);
    CHECK(kind_of([&] {
              (void)client.complete(render_prompt(TemplateId::trend_training_data, {{"company", "Target"}}));
          }) == LlmError::Kind::replay_miss);
    CHECK(transport->requests.empty());
}

TEST_CASE("config checks") {
    ProviderConfig c;
    c.mode = Mode::record;
    CHECK(check_config(c).size() >= 2);  // no transcript, no model
    CHECK(kind_of([&] { Client bad(c); }) == LlmError::Kind::invalid_config);
    c.transcript = "x.jsonl";
    c.model = "m";
    c.timeout_seconds = 0;
    CHECK(check_config(c).size() == 1);
}

TEST_CASE("live mode needs a key before touching the transport") {
    ::unsetenv("STRATAGEM_TEST_MISSING_KEY");
    auto transport = std::make_shared<FakeTransport>(HttpResponse{200, chat_body("- x")});
    Client client(live_config("http://unused.invalid", "STRATAGEM_TEST_MISSING_KEY"), transport);
    CHECK(kind_of([&] { (void)client.complete(render_prompt(TemplateId::trend_training_data, {{"company", "X"}})); }) ==
          LlmError::Kind::auth_missing);
    CHECK(transport->requests.empty());
}

TEST_CASE("live and record modes against a local server") {
    ::setenv("STRATAGEM_TEST_KEY", "sk-test", 1);
    LocalServer server;
    const auto prompt = render_prompt(TemplateId::trend_training_data, {{"company", "Walmart"}});

    SUBCASE("live") {
        Client client(live_config(server.endpoint(), "STRATAGEM_TEST_KEY"));
        const auto c = client.complete(prompt);
        CHECK(c.text.find("Revenue grew") != std::string::npos);
        CHECK(server.last_auth == "Bearer sk-test");
        const auto body = nlohmann::json::parse(server.last_body);
        CHECK(body["model"] == "test-model");
        CHECK(body["messages"][0]["content"] == prompt.text);
    }
    SUBCASE("record then replay") {
        TempDir dir("record");
        auto config = live_config(server.endpoint(), "STRATAGEM_TEST_KEY");
        config.mode = Mode::record;
        config.transcript = dir.file("rec.jsonl");
        Client recorder(config, nullptr, [] { return std::string("2024-05-01T00:00:00Z"); });
        const auto live = recorder.complete(prompt);

        config.mode = Mode::replay;
        Client replayer(config);
        const auto replayed = replayer.complete(prompt);
        CHECK(replayed.text == live.text);
        const Transcript t(config.transcript);
        REQUIRE(t.records().size() == 1);
        CHECK(t.records()[0].request == prompt.text);
        CHECK(t.records()[0].timestamp == "2024-05-01T00:00:00Z");
    }
    SUBCASE("http status") {
        server.status = 429;
        Client client(live_config(server.endpoint(), "STRATAGEM_TEST_KEY"));
        try {
            (void)client.complete(prompt);
            FAIL("expected an error");
        } catch (const LlmError& e) {
            CHECK(e.kind() == LlmError::Kind::http_status);
            CHECK(e.status() == 429);
        }
    }
    SUBCASE("timeout") {
        server.delay_ms = 1500;
        auto config = live_config(server.endpoint(), "STRATAGEM_TEST_KEY");
        config.timeout_seconds = 0.3;
        Client client(config);
        CHECK(kind_of([&] { (void)client.complete(prompt); }) == LlmError::Kind::timeout);
    }
    SUBCASE("malformed body") {
        auto transport = std::make_shared<FakeTransport>(HttpResponse{200, "{\"choices\": []}"});
        Client client(live_config(server.endpoint(), "STRATAGEM_TEST_KEY"), transport);
        CHECK(kind_of([&] { (void)client.complete(prompt); }) == LlmError::Kind::malformed_response);
    }
}

TEST_CASE("insight list parsing of the Walmart trend response") {
    const auto items = parse_insight_list(read_fixture("llm/walmart_trend.md"), "chatgpt");
    REQUIRE(items.size() == 7);
    CHECK(items[0].id == "llm/chatgpt/01");
    CHECK(items[0].statement.find("steady revenue growth") != std::string::npos);
    CHECK(items[0].direction == insight::Direction::positive);
    CHECK(std::count(items[0].themes.begin(), items[0].themes.end(), insight::ThemeTag::growth) == 1);
    for (const auto& i : items) {
        CHECK(std::holds_alternative<insight::LlmProvenance>(i.provenance));
        CHECK(i.magnitude == kLlmMagnitude);
    }
}

TEST_CASE("insight list parsing edge cases") {
    CHECK(kind_of([] { (void)parse_insight_list(""); }) == LlmError::Kind::no_items_found);
    CHECK(kind_of([] { (void)parse_insight_list("Just one paragraph of prose without a list."); }) ==
          LlmError::Kind::no_items_found);

    const auto labelled = parse_insight_list(
        "1. **Strong Physical Presence:** Foobar operates 1300 stores across 13 countries worldwide.\n"
        "2. **Brand Awareness:** Brand awareness is high at 79 percent of surveyed consumers.\n");
    REQUIRE(labelled.size() == 2);
    CHECK(labelled[0].statement.find("**") == std::string::npos);
    CHECK(labelled[0].statement.rfind("Foobar operates", 0) == 0);
    CHECK(std::count(labelled[0].themes.begin(), labelled[0].themes.end(), insight::ThemeTag::market_presence) == 1);

    const auto nested = parse_insight_list(
        "- Online sales trail the peer group by a wide margin this year\n"
        "  - especially in mobile checkout conversion\n"
        "- Supply chain delays remain the longest in the sample set\n");
    CHECK(nested.size() == 2);
}

TEST_CASE("framework parsing of the Walmart SWOT response") {
    const auto schema = frameworks::schema_for(frameworks::FrameworkKind::swot);
    const auto parsed = parse_framework_assignment(read_fixture("llm/walmart_swot.md"), schema, "Walmart", "chatgpt");
    const auto& a = parsed.analysis;
    REQUIRE(a.slots.size() == 4);
    for (const auto& s : a.slots) CHECK(s.factors.size() == 2);
    CHECK(a.slots[0].factors[0].insight.statement.find("global presence") != std::string::npos);
    CHECK(a.subject == "Walmart");
    CHECK(frameworks::validate_analysis(a).empty());
}

TEST_CASE("framework parsing failures are typed") {
    const auto vd = frameworks::schema_for(frameworks::FrameworkKind::value_discipline);
    CHECK(kind_of([&] {
              (void)parse_framework_assignment(read_fixture("llm/foobar_value_discipline_refusal.md"), vd);
          }) == LlmError::Kind::refusal);

    const auto swot = frameworks::schema_for(frameworks::FrameworkKind::swot);
    CHECK(kind_of([&] { (void)parse_framework_assignment("Here are some thoughts about the company.", swot); }) ==
          LlmError::Kind::no_slot_headings);

    const auto empty = parse_framework_assignment("Strengths:\n\nWeaknesses:\n", swot);
    for (const auto& s : empty.analysis.slots) CHECK(s.factors.empty());
    CHECK(std::any_of(empty.diagnostics.begin(), empty.diagnostics.end(),
                      [](const auto& d) { return d.code == "EmptyAnalysis"; }));

    const auto porter = frameworks::schema_for(frameworks::FrameworkKind::porter5);
    const auto p = parse_framework_assignment(
        "## Bargaining Power of Suppliers\n- Suppliers are concentrated and can raise input prices sharply.\n"
        "## Threat of Substitutes\n- Streaming and rental services substitute for buying physical goods.\n",
        porter);
    CHECK(p.analysis.slots[1].factors.size() == 1);
    CHECK(p.analysis.slots[4].factors.size() == 1);
    CHECK(frameworks::validate_analysis(p.analysis).empty());
}

TEST_CASE("parsers are total over arbitrary text") {
    std::mt19937 rng(5);
    const std::vector<std::string> pieces = {"Strengths:", "Threats:", "- ", "1. ", "**", "\n", "\n\n", " ", "word",
                                             "growth in revenue", "competition", "# Weaknesses", ":", "(", ")", "\t",
                                             "I cannot", "Opportunities", "stores", "é"};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::uniform_int_distribution<int> len(0, 60);
    const auto swot = frameworks::schema_for(frameworks::FrameworkKind::swot);
    for (int trial = 0; trial < 500; ++trial) {
        std::string text;
        for (int k = len(rng); k > 0; --k) text += pieces[pick(rng)];
        try {
            (void)parse_insight_list(text);
        } catch (const LlmError&) {
        }
        try {
            const auto p = parse_framework_assignment(text, swot);
            REQUIRE(frameworks::validate_analysis(p.analysis).empty());
        } catch (const LlmError&) {
        }
    }
}
