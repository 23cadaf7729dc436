#pragma once

#include "stratagem/frameworks.hpp"
#include "stratagem/insight.hpp"
#include "stratagem/rules.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stratagem::llm {

class LlmError : public std::runtime_error {
public:
    enum class Kind {
        missing_binding,
        unknown_template,
        invalid_config,
        auth_missing,
        timeout,
        http_status,
        transport,
        malformed_response,
        replay_miss,
        transcript,
        no_items_found,
        no_slot_headings,
        /// No slot headings, and the text reads as the model declining the task.
        refusal,
        invalid_analysis,
    };

    LlmError(Kind kind, const std::string& message, int status = 0)
        : std::runtime_error(message), kind_(kind), status_(status) {}

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    /// HTTP status for http_status errors.
    [[nodiscard]] int status() const noexcept { return status_; }

private:
    Kind kind_;
    int status_;
};

std::string_view to_string(LlmError::Kind kind);

enum class TemplateId { trend_training_data, trend_timeseries, insights_tabular, framework_analysis, one_shot_diagram };

std::string_view to_string(TemplateId id);
std::optional<TemplateId> template_from_string(std::string_view text);
std::string_view template_text(TemplateId id);

using Bindings = std::map<std::string, std::string>;

struct Prompt {
    TemplateId id = TemplateId::framework_analysis;
    Bindings bindings;
    std::string text;
    std::string hash;
};

/// Substitutes {placeholders}; throws LlmError(missing_binding).
Prompt render_prompt(TemplateId id, const Bindings& bindings);

/// SHA-256 hex of the canonical form: template id plus sorted bindings with
/// whitespace runs collapsed.
std::string request_hash(TemplateId id, const Bindings& bindings);

enum class Mode { live, record, replay };

std::string_view to_string(Mode mode);

/// Request/response shape for one provider family.
struct Adapter {
    std::string name = "openai-compatible";
    std::string path = "/v1/chat/completions";
    std::string auth_header = "Authorization";
    std::string auth_prefix = "Bearer ";
    /// JSON pointer to the assistant text in the response body.
    std::string text_pointer = "/choices/0/message/content";
};

struct ProviderConfig {
    std::string endpoint = "https://api.openai.com";
    std::string model;
    /// Name of the environment variable holding the key; the key itself is never stored.
    std::string api_key_env = "STRATAGEM_LLM_API_KEY";
    double timeout_seconds = 60.0;
    Mode mode = Mode::replay;
    std::filesystem::path transcript;
    Adapter adapter;
};

std::vector<std::string> check_config(const ProviderConfig& config);
nlohmann::ordered_json to_json(const ProviderConfig& config);

struct TranscriptRecord {
    std::string hash;
    std::string model;
    std::string request;
    std::string response;
    std::string timestamp;

    bool operator==(const TranscriptRecord&) const = default;
};

nlohmann::ordered_json to_json(const TranscriptRecord& record);

/// JSON-lines transcript keyed by request hash.
class Transcript {
public:
    /// Reads the file if it exists; throws LlmError(transcript) on malformed lines or duplicate hashes.
    explicit Transcript(std::filesystem::path path);

    [[nodiscard]] const TranscriptRecord* find(std::string_view hash) const;
    [[nodiscard]] const std::vector<TranscriptRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

    /// Adds or replaces the record for its hash and rewrites the file.
    void upsert(TranscriptRecord record);

private:
    std::filesystem::path path_;
    std::vector<TranscriptRecord> records_;
    std::mutex write_mutex_;
};

struct HttpRequest {
    std::string url;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
    double timeout_seconds = 60.0;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// Throws LlmError(timeout) or LlmError(transport) when no response arrives.
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<HttpTransport> make_http_transport();

struct Completion {
    std::string text;
    std::string model;
};

class Client {
public:
    using Clock = std::function<std::string()>;

    /// A null transport means the built-in HTTP one, created on first live call.
    explicit Client(ProviderConfig config, std::shared_ptr<HttpTransport> transport = nullptr, Clock clock = {});

    Completion complete(const Prompt& prompt);

    [[nodiscard]] const ProviderConfig& config() const noexcept { return config_; }

private:
    Completion call_live(const Prompt& prompt);
    Transcript& transcript();

    ProviderConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    Clock clock_;
    std::optional<Transcript> transcript_;
};

/// UTC now as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Items of a markdown-ish list: bullets, numbers or bold-labelled paragraphs;
/// nested items fold into their parent. Throws LlmError(no_items_found).
std::vector<insight::Insight> parse_insight_list(std::string_view response, std::string_view model = "llm");

/// Keyword-based direction for free text.
insight::Direction direction_for_text(std::string_view text);

struct FrameworkParse {
    frameworks::OrganizedAnalysis analysis;
    insight::Diagnostics diagnostics;
};

/// Reads "Heading:" sections into slots. Throws LlmError(refusal), (no_slot_headings)
/// or (invalid_analysis); the returned analysis always passes validate_analysis.
FrameworkParse parse_framework_assignment(std::string_view response, const frameworks::FrameworkSchema& schema,
                                          std::string subject = {}, std::string_view model = "llm");

inline constexpr double kLlmFit = 0.7;
inline constexpr double kLlmMagnitude = 0.5;

}  // namespace stratagem::llm
