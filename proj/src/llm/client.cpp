#include "stratagem/llm.hpp"

#include "text_util.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

namespace stratagem::llm {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(LlmError::Kind kind) {
    using K = LlmError::Kind;
    switch (kind) {
        case K::missing_binding: return "MissingBinding";
        case K::unknown_template: return "UnknownTemplate";
        case K::invalid_config: return "InvalidConfig";
        case K::auth_missing: return "AuthMissing";
        case K::timeout: return "Timeout";
        case K::http_status: return "HttpStatus";
        case K::transport: return "Transport";
        case K::malformed_response: return "MalformedResponse";
        case K::replay_miss: return "ReplayMiss";
        case K::transcript: return "Transcript";
        case K::no_items_found: return "NoItemsFound";
        case K::no_slot_headings: return "NoSlotHeadings";
        case K::refusal: return "Refusal";
        case K::invalid_analysis: return "InvalidAnalysis";
    }
    return "Unknown";
}

std::string_view to_string(TemplateId id) {
    switch (id) {
        case TemplateId::trend_training_data: return "trend_training_data";
        case TemplateId::trend_timeseries: return "trend_timeseries";
        case TemplateId::insights_tabular: return "insights_tabular";
        case TemplateId::framework_analysis: return "framework_analysis";
        case TemplateId::one_shot_diagram: return "one_shot_diagram";
    }
    return "";
}

std::optional<TemplateId> template_from_string(std::string_view text) {
    for (auto id : {TemplateId::trend_training_data, TemplateId::trend_timeseries, TemplateId::insights_tabular,
                    TemplateId::framework_analysis, TemplateId::one_shot_diagram}) {
        if (to_string(id) == text) return id;
    }
    return std::nullopt;
}

std::string_view template_text(TemplateId id) {
    switch (id) {
        case TemplateId::trend_training_data:
            return "Based on your training data knowledge, describe the recent trend in the income statement from "
                   "{company}.";
        case TemplateId::trend_timeseries: return "Describe the trend in this timeseries data.\n{data_block}";
        case TemplateId::insights_tabular:
            return "Given the data below, what insights can you derive about {company}?\n{data_block}";
        case TemplateId::framework_analysis: return "Do a {framework} analysis of {company}";
        case TemplateId::one_shot_diagram:
            return "Do a {framework} for the company {company} and create the standard diagram as HTML SVG, include "
                   "no more than {max_per_slot} factors per cell and at least 5-10 words per each factor in each "
                   "cell. Your factors can include metrics available to you as of your last update.";
    }
    return "";
}

Prompt render_prompt(TemplateId id, const Bindings& bindings) {
    const std::string_view text = template_text(id);
    Prompt prompt;
    prompt.id = id;
    prompt.bindings = bindings;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto open = text.find('{', i);
        if (open == std::string_view::npos) {
            prompt.text.append(text.substr(i));
            break;
        }
        const auto close = text.find('}', open);
        prompt.text.append(text.substr(i, open - i));
        const std::string name(text.substr(open + 1, close - open - 1));
        const auto it = bindings.find(name);
        if (it == bindings.end()) {
            throw LlmError(LlmError::Kind::missing_binding,
                           std::string(to_string(id)) + " needs a value for {" + name + "}");
        }
        prompt.text += it->second;
        i = close + 1;
    }
    prompt.hash = request_hash(id, bindings);
    return prompt;
}

namespace {

std::string collapse_whitespace(std::string_view text) { return detail::join(detail::split_words(text), " "); }

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int k = 0; k < length; ++k) {
        out.push_back(kHex[digest[k] >> 4]);
        out.push_back(kHex[digest[k] & 0xF]);
    }
    return out;
}

TranscriptRecord record_from_json(const json& j, std::size_t line) {
    TranscriptRecord r;
    for (const auto& [key, field] : {std::pair<const char*, std::string*>{"hash", &r.hash},
                                     {"request", &r.request},
                                     {"response", &r.response},
                                     {"timestamp", &r.timestamp}}) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw LlmError(LlmError::Kind::transcript,
                           "transcript line " + std::to_string(line) + " lacks string '" + key + "'");
        }
        *field = j[key].get<std::string>();
    }
    r.model = j.value("model", std::string());
    return r;
}

std::string url_join(std::string_view endpoint, std::string_view path) {
    std::string out(endpoint);
    while (!out.empty() && out.back() == '/') out.pop_back();
    if (!path.empty() && path.front() != '/') out.push_back('/');
    out.append(path);
    return out;
}

class HttplibTransport final : public HttpTransport {
public:
    HttpResponse post(const HttpRequest& request) override {
        const auto scheme = request.url.find("://");
        const auto path_start = request.url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
        const std::string base = request.url.substr(0, path_start);
        const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

        httplib::Client client(base);
        const auto seconds = static_cast<time_t>(request.timeout_seconds);
        const auto micros = static_cast<time_t>((request.timeout_seconds - static_cast<double>(seconds)) * 1e6);
        client.set_connection_timeout(seconds, micros);
        client.set_read_timeout(seconds, micros);
        client.set_write_timeout(seconds, micros);
        httplib::Headers headers;
        for (const auto& [name, value] : request.headers) headers.emplace(name, value);

        auto result = client.Post(path, headers, request.body, "application/json");
        if (!result) {
            const auto error = result.error();
            const std::string message = "POST " + request.url + " failed: " + httplib::to_string(error);
            if (error == httplib::Error::ConnectionTimeout || error == httplib::Error::Read) {
                throw LlmError(LlmError::Kind::timeout, message);
            }
            throw LlmError(LlmError::Kind::transport, message);
        }
        return {result->status, result->body};
    }
};

}  // namespace

std::string request_hash(TemplateId id, const Bindings& bindings) {
    json canonical;
    canonical["template"] = to_string(id);
    json b = json::object();
    for (const auto& [key, value] : bindings) b[key] = collapse_whitespace(value);
    canonical["bindings"] = std::move(b);
    return sha256_hex(canonical.dump());
}

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::live: return "live";
        case Mode::record: return "record";
        case Mode::replay: return "replay";
    }
    return "replay";
}

std::vector<std::string> check_config(const ProviderConfig& config) {
    std::vector<std::string> problems;
    if (config.mode != Mode::live && config.transcript.empty()) {
        problems.push_back(std::string(to_string(config.mode)) + " mode needs a transcript path");
    }
    if (config.mode != Mode::replay) {
        if (config.endpoint.empty()) problems.emplace_back("endpoint is empty");
        if (config.model.empty()) problems.emplace_back("model name is empty");
        if (config.api_key_env.empty()) problems.emplace_back("api key variable name is empty");
    }
    if (!(config.timeout_seconds > 0.0)) problems.emplace_back("timeout must be positive");
    return problems;
}

ojson to_json(const ProviderConfig& config) {
    ojson j;
    j["endpoint"] = config.endpoint;
    j["model"] = config.model;
    j["api_key_env"] = config.api_key_env;
    j["timeout_seconds"] = config.timeout_seconds;
    j["mode"] = to_string(config.mode);
    j["transcript"] = config.transcript.string();
    j["adapter"] = config.adapter.name;
    return j;
}

ojson to_json(const TranscriptRecord& record) {
    ojson j;
    j["hash"] = record.hash;
    j["model"] = record.model;
    j["request"] = record.request;
    j["response"] = record.response;
    j["timestamp"] = record.timestamp;
    return j;
}

Transcript::Transcript(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (detail::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw LlmError(LlmError::Kind::transcript,
                           path_.string() + ":" + std::to_string(number) + ": " + e.what());
        }
        auto record = record_from_json(j, number);
        if (find(record.hash)) {
            throw LlmError(LlmError::Kind::transcript,
                           path_.string() + ":" + std::to_string(number) + ": duplicate hash " + record.hash);
        }
        records_.push_back(std::move(record));
    }
}

const TranscriptRecord* Transcript::find(std::string_view hash) const {
    for (const auto& r : records_) {
        if (r.hash == hash) return &r;
    }
    return nullptr;
}

void Transcript::upsert(TranscriptRecord record) {
    std::lock_guard lock(write_mutex_);
    bool replaced = false;
    for (auto& r : records_) {
        if (r.hash == record.hash) {
            r = record;
            replaced = true;
        }
    }
    if (!replaced) records_.push_back(std::move(record));
    if (path_.empty()) return;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::trunc);
    for (const auto& r : records_) out << to_json(r).dump() << '\n';
    if (!out) throw LlmError(LlmError::Kind::transcript, "cannot write " + path_.string());
}

std::shared_ptr<HttpTransport> make_http_transport() { return std::make_shared<HttplibTransport>(); }

std::string utc_timestamp() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

Client::Client(ProviderConfig config, std::shared_ptr<HttpTransport> transport, Clock clock)
    : config_(std::move(config)), transport_(std::move(transport)), clock_(std::move(clock)) {
    if (const auto problems = check_config(config_); !problems.empty()) {
        throw LlmError(LlmError::Kind::invalid_config, problems.front());
    }
    if (!clock_) clock_ = utc_timestamp;
}

Transcript& Client::transcript() {
    if (!transcript_) transcript_.emplace(config_.transcript);
    return *transcript_;
}

Completion Client::call_live(const Prompt& prompt) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (!key || !*key) {
        throw LlmError(LlmError::Kind::auth_missing, "environment variable " + config_.api_key_env + " is not set");
    }
    if (!transport_) transport_ = make_http_transport();

    ojson body;
    body["model"] = config_.model;
    body["messages"] = ojson::array({{{"role", "user"}, {"content", prompt.text}}});
    body["temperature"] = 0;

    HttpRequest request;
    request.url = url_join(config_.endpoint, config_.adapter.path);
    request.body = body.dump();
    request.headers.emplace_back(config_.adapter.auth_header, config_.adapter.auth_prefix + key);
    request.timeout_seconds = config_.timeout_seconds;

    const auto response = transport_->post(request);
    if (response.status < 200 || response.status >= 300) {
        throw LlmError(LlmError::Kind::http_status,
                       "provider answered HTTP " + std::to_string(response.status), response.status);
    }
    try {
        const auto j = json::parse(response.body);
        const auto& text = j.at(json::json_pointer(config_.adapter.text_pointer));
        if (!text.is_string()) throw LlmError(LlmError::Kind::malformed_response, "response text is not a string");
        return {text.get<std::string>(), config_.model};
    } catch (const json::exception& e) {
        throw LlmError(LlmError::Kind::malformed_response, std::string("unexpected response body: ") + e.what());
    }
}

Completion Client::complete(const Prompt& prompt) {
    switch (config_.mode) {
        case Mode::replay: {
            const auto* record = transcript().find(prompt.hash);
            if (!record) {
                throw LlmError(LlmError::Kind::replay_miss, "no recorded response for " +
                                                                std::string(to_string(prompt.id)) + " request " +
                                                                prompt.hash + " in " + config_.transcript.string());
            }
            return {record->response, record->model.empty() ? config_.model : record->model};
        }
        case Mode::record: {
            auto completion = call_live(prompt);
            transcript().upsert({prompt.hash, completion.model, prompt.text, completion.text, clock_()});
            return completion;
        }
        case Mode::live: return call_live(prompt);
    }
    throw LlmError(LlmError::Kind::invalid_config, "unknown mode");
}

}  // namespace stratagem::llm
