#include "stratagem/cli.hpp"

#include "stratagem/diagram.hpp"
#include "stratagem/frameworks.hpp"
#include "stratagem/ingest.hpp"
#include "stratagem/llm.hpp"
#include "stratagem/rules.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace stratagem::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Raised inside a command; carries the exit code.
struct Failure {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, std::string message) { throw Failure{code, std::move(message)}; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(kInputError, "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(kInputError, "cannot write " + path);
    out << text;
    if (!out) fail(kInputError, "failed writing " + path);
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        fail(kInputError, path + ": not valid JSON: " + e.what());
    }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

struct Options {
    std::vector<std::string> tables;
    std::vector<std::string> timeseries;
    std::string subject;
    std::string framework = "swot";
    std::string schema_path;
    std::string llm = "off";
    std::string model;
    std::string endpoint;
    int max_per_slot = 0;  // 0 keeps the schema default
    std::string style_path;
    std::string output;
    std::string insights_path;
    std::string analysis_path;
};

std::optional<llm::ProviderConfig> provider_from(const Options& o) {
    if (o.llm.empty() || o.llm == "off") return std::nullopt;
    const auto colon = o.llm.find(':');
    if (colon == std::string::npos) fail(kInputError, "--llm expects off, live:MODEL, record:PATH or replay:PATH");
    const std::string mode = o.llm.substr(0, colon);
    const std::string arg = o.llm.substr(colon + 1);
    if (arg.empty()) fail(kInputError, "--llm " + mode + ": needs a value after the colon");

    llm::ProviderConfig config;
    if (const char* endpoint = std::getenv("STRATAGEM_LLM_ENDPOINT"); endpoint && *endpoint) config.endpoint = endpoint;
    if (!o.endpoint.empty()) config.endpoint = o.endpoint;
    config.model = o.model;
    if (config.model.empty()) {
        if (const char* model = std::getenv("STRATAGEM_LLM_MODEL"); model && *model) config.model = model;
    }
    if (mode == "live") {
        config.mode = llm::Mode::live;
        config.model = arg;
    } else if (mode == "record") {
        config.mode = llm::Mode::record;
        config.transcript = arg;
    } else if (mode == "replay") {
        config.mode = llm::Mode::replay;
        config.transcript = arg;
    } else {
        fail(kInputError, "unknown --llm mode '" + mode + "'");
    }
    if (const auto problems = llm::check_config(config); !problems.empty()) {
        fail(kInputError, "--llm: " + problems.front());
    }
    return config;
}

frameworks::FrameworkSchema schema_from(const Options& o) {
    frameworks::FrameworkSchema schema;
    if (!o.schema_path.empty()) {
        try {
            schema = frameworks::load_custom_schema(read_json(o.schema_path));
        } catch (const frameworks::FrameworkError& e) {
            fail(kInputError, o.schema_path + ": " + e.what());
        }
    } else {
        const auto kind = frameworks::kind_from_string(o.framework);
        if (!kind || *kind == frameworks::FrameworkKind::custom) {
            fail(kInputError, "unknown framework '" + o.framework + "' (swot, porter5, cycle, value-discipline)");
        }
        schema = frameworks::schema_for(*kind);
    }
    if (o.max_per_slot < 0) fail(kInputError, "--max-per-slot must be at least 1");
    if (o.max_per_slot > 0) schema.max_per_slot = static_cast<std::size_t>(o.max_per_slot);
    if (const auto problems = frameworks::check_schema(schema); !problems.empty()) {
        fail(kInputError, "schema: " + problems.front());
    }
    return schema;
}

diagram::Style style_from(const Options& o) {
    if (o.style_path.empty()) return {};
    try {
        return diagram::style_from_json(read_json(o.style_path));
    } catch (const diagram::DiagramError& e) {
        fail(kInputError, o.style_path + ": " + e.what());
    }
}

void print_diagnostics(const insight::Diagnostics& diagnostics, std::ostream& err) {
    for (const auto& d : diagnostics) err << "note: [" << d.code << "] " << d.message << "\n";
}

/// Rule insights first, then LLM items whose statement is new.
void merge_llm(std::vector<insight::Insight>& into, std::vector<insight::Insight> extra) {
    std::set<std::string> statements;
    std::set<std::string> ids;
    for (const auto& i : into) {
        statements.insert(i.statement);
        ids.insert(i.id);
    }
    for (auto& i : extra) {
        if (!statements.insert(i.statement).second) continue;
        const std::string base = i.id;
        for (int n = 2; ids.count(i.id); ++n) i.id = base + "-" + std::to_string(n);
        ids.insert(i.id);
        into.push_back(std::move(i));
    }
}

std::string insights_text(const Options& o, std::ostream& err) {
    const auto provider = provider_from(o);
    if (o.tables.empty() && o.timeseries.empty() && !provider) {
        fail(kInputError, "nothing to analyse: give --table and/or --timeseries, or --llm for training-data mode");
    }
    if (o.subject.empty()) fail(kInputError, "--subject is required");
    if (o.tables.size() > 1 || o.timeseries.size() > 1) fail(kInputError, "at most one --table and one --timeseries");

    std::optional<ingest::Dataset> table;
    std::optional<ingest::TimeSeries> series;
    std::string current;
    try {
        if (!o.tables.empty()) {
            current = o.tables.front();
            const auto text = read_file(current);
            table = ingest::parse_table(text, ingest::detect_dialect(text));
        }
        if (!o.timeseries.empty()) {
            current = o.timeseries.front();
            series = ingest::parse_timeseries(read_file(current));
        }
    } catch (const ingest::IngestError& e) {
        std::string where = current;
        if (e.line() > 0) where += ":" + std::to_string(e.line());
        fail(kInputError, where + ": " + e.what());
    }

    insight::Diagnostics diagnostics;
    std::vector<insight::Insight> insights;
    if (table || series) insights = insight::run_all_rules(table, series, o.subject, &diagnostics);
    print_diagnostics(diagnostics, err);

    if (provider) {
        llm::Client client(*provider);
        std::vector<llm::Prompt> prompts;
        if (!table && !series) {
            prompts.push_back(llm::render_prompt(llm::TemplateId::trend_training_data, {{"company", o.subject}}));
        }
        if (table) {
            prompts.push_back(llm::render_prompt(llm::TemplateId::insights_tabular,
                                                 {{"company", o.subject}, {"data_block", ingest::write_table(*table)}}));
        }
        if (series) {
            prompts.push_back(llm::render_prompt(llm::TemplateId::trend_timeseries,
                                                 {{"data_block", ingest::write_timeseries(*series)}}));
        }
        for (const auto& prompt : prompts) {
            const auto completion = client.complete(prompt);
            merge_llm(insights, llm::parse_insight_list(completion.text, completion.model));
        }
    }
    return dump(insight::to_json(insight::InsightSet{o.subject, std::move(insights)}));
}

struct Organized {
    std::string json_text;
    std::string summary;
};

std::string summary_table(const frameworks::OrganizedAnalysis& analysis) {
    std::ostringstream s;
    s << analysis.schema.name << (analysis.subject.empty() ? "" : " for " + analysis.subject) << "\n";
    for (std::size_t k = 0; k < analysis.slots.size(); ++k) {
        const auto& slot = analysis.slots[k];
        s << "  " << analysis.schema.slots[k].id << ": " << slot.factors.size() << " factor(s)";
        if (!slot.overflow.empty()) s << ", " << slot.overflow.size() << " overflow";
        if (const auto* risk = std::get_if<frameworks::RiskLevel>(&slot.attribute)) {
            s << ", risk " << frameworks::to_string(*risk);
        } else if (const auto* axis = std::get_if<frameworks::AxisScore>(&slot.attribute)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.3f", axis->value);
            s << ", score " << buf;
        }
        s << "\n";
    }
    s << "  unplaced: " << analysis.unplaced.size() << "\n";
    return s.str();
}

Organized organize_text(const Options& o, std::ostream& err) {
    const auto schema = schema_from(o);
    const auto provider = provider_from(o);
    frameworks::OrganizedAnalysis analysis;
    if (provider) {
        if (o.subject.empty()) fail(kInputError, "--subject is required with --llm");
        llm::Client client(*provider);
        const auto prompt =
            llm::render_prompt(llm::TemplateId::framework_analysis, {{"company", o.subject}, {"framework", schema.name}});
        const auto completion = client.complete(prompt);
        auto parsed = llm::parse_framework_assignment(completion.text, schema, o.subject, completion.model);
        print_diagnostics(parsed.diagnostics, err);
        analysis = std::move(parsed.analysis);
    } else {
        if (o.insights_path.empty()) fail(kInputError, "--insights is required (or --llm to ask the model)");
        std::vector<std::string> violations;
        const auto set = insight::insight_set_from_json(read_json(o.insights_path), violations);
        if (!set || !violations.empty()) {
            std::string message = o.insights_path + ": " + std::to_string(violations.size()) + " violation(s)";
            for (const auto& v : violations) message += "\n  " + v;
            fail(kInputError, message);
        }
        const std::string subject = o.subject.empty() ? set->subject : o.subject;
        analysis = frameworks::organize(set->insights, schema, subject);
    }
    if (const auto violations = frameworks::validate_analysis(analysis); !violations.empty()) {
        std::string message = "analysis failed validation";
        for (const auto& v : violations) message += "\n  " + v.message;
        fail(kInputError, message);
    }
    return {dump(frameworks::to_json(analysis)), summary_table(analysis)};
}

struct Rendered {
    std::string svg;
    double width;
    double height;
    std::string notes;  // factors left out of the drawing
};

Rendered render_text(const std::string& analysis_path, const json& analysis_json, const Options& o) {
    std::vector<std::string> problems;
    const auto analysis = frameworks::analysis_from_json(analysis_json, problems);
    if (!analysis || !problems.empty()) {
        std::string message = analysis_path + ": " + std::to_string(problems.size()) + " problem(s)";
        for (const auto& p : problems) message += "\n  " + p;
        fail(kInputError, message);
    }
    const auto style = style_from(o);
    try {
        const auto spec = diagram::layout(*analysis, style);
        std::string notes;
        for (std::size_t k = 0; k < analysis->slots.size(); ++k) {
            if (const auto n = analysis->slots[k].overflow.size(); n > 0) {
                notes += "note: [SlotOverflow] " + analysis->schema.slots[k].id + ": " + std::to_string(n) +
                         " factor(s) beyond max_per_slot not drawn\n";
            }
        }
        return {diagram::emit_svg(spec), spec.width, spec.height, notes};
    } catch (const diagram::DiagramError& e) {
        const int code = e.kind() == diagram::DiagramError::Kind::invalid_input ? kInputError : kLayoutError;
        fail(code, std::string("layout: ") + e.what());
    }
}

std::string stem_of(const std::string& svg_path) {
    fs::path p(svg_path);
    if (p.extension() == ".svg") p.replace_extension();
    return p.string();
}

int guarded(std::ostream& err, const std::function<void()>& body) {
    try {
        body();
        return kOk;
    } catch (const Failure& f) {
        err << "error: " << f.message << "\n";
        return f.code;
    } catch (const llm::LlmError& e) {
        err << "error: llm " << llm::to_string(e.kind()) << ": " << e.what() << "\n";
        return kLlmError;
    } catch (const ingest::IngestError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const diagram::DiagramError& e) {
        err << "error: " << e.what() << "\n";
        return kLayoutError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
}

void add_input_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--table", o.tables, "Tabular metrics file (TSV or CSV)");
    cmd->add_option("--timeseries", o.timeseries, "Daily price series (date, close[, volume])");
}

void add_llm_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--llm", o.llm, "off | live:MODEL | record:PATH | replay:PATH");
    cmd->add_option("--model", o.model, "Model name for record mode");
    cmd->add_option("--endpoint", o.endpoint, "Provider base URL (default from STRATAGEM_LLM_ENDPOINT)");
}

void add_framework_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--framework", o.framework, "swot | porter5 | cycle | value-discipline");
    cmd->add_option("--schema", o.schema_path, "Custom framework schema (JSON)");
    cmd->add_option("--max-per-slot", o.max_per_slot, "Factors shown per slot");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"From business data to strategy diagrams", "stratagem"};
    app.require_subcommand(1);
    Options o;

    auto* insights = app.add_subcommand("insights", "Derive insights from data files");
    add_input_flags(insights, o);
    add_llm_flags(insights, o);
    insights->add_option("--subject", o.subject, "Company the analysis is about");
    insights->add_option("-o,--output", o.output, "Insights JSON (default: stdout)");

    auto* organize = app.add_subcommand("organize", "Place insights into a framework");
    organize->add_option("--insights", o.insights_path, "Insights JSON from 'insights'");
    organize->add_option("--subject", o.subject, "Company (default: taken from the insights file)");
    add_framework_flags(organize, o);
    add_llm_flags(organize, o);
    organize->add_option("-o,--output", o.output, "Analysis JSON (default: stdout)");

    auto* render = app.add_subcommand("render", "Draw an analysis as SVG");
    render->add_option("--analysis", o.analysis_path, "Analysis JSON from 'organize'")->required();
    render->add_option("--style", o.style_path, "Style JSON");
    render->add_option("-o,--output", o.output, "SVG file")->required();

    auto* pipeline = app.add_subcommand("pipeline", "insights, organize and render in one go");
    add_input_flags(pipeline, o);
    add_llm_flags(pipeline, o);
    add_framework_flags(pipeline, o);
    pipeline->add_option("--subject", o.subject, "Company the analysis is about");
    pipeline->add_option("--style", o.style_path, "Style JSON");
    pipeline->add_option("-o,--output", o.output, "SVG file; intermediates go next to it")->required();

    auto* transcript = app.add_subcommand("transcript", "Maintain LLM replay transcripts");
    transcript->require_subcommand(1);
    auto* add = transcript->add_subcommand("add", "Store a response for a rendered prompt");
    std::string t_path, t_template, t_response, t_model = "recorded", t_timestamp;
    std::vector<std::string> t_bind, t_bind_file;
    add->add_option("--transcript", t_path, "JSONL transcript")->required();
    add->add_option("--template", t_template, "Prompt template id")->required();
    add->add_option("--bind", t_bind, "KEY=VALUE binding");
    add->add_option("--bind-file", t_bind_file, "KEY=PATH binding read from a file");
    add->add_option("--response", t_response, "File holding the model's reply")->required();
    add->add_option("--model", t_model, "Model that produced the reply");
    add->add_option("--timestamp", t_timestamp, "Record timestamp (default: now)");

    std::vector<std::string> argv_store{"stratagem"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kInputError;
    }

    if (insights->parsed()) {
        return guarded(err, [&] {
            const auto text = insights_text(o, err);
            if (o.output.empty()) out << text;
            else write_file(o.output, text);
        });
    }
    if (organize->parsed()) {
        return guarded(err, [&] {
            const auto result = organize_text(o, err);
            if (o.output.empty()) {
                out << result.json_text;
                err << result.summary;
            } else {
                write_file(o.output, result.json_text);
                out << result.summary;
            }
        });
    }
    if (render->parsed()) {
        return guarded(err, [&] {
            const auto rendered = render_text(o.analysis_path, read_json(o.analysis_path), o);
            write_file(o.output, rendered.svg);
            out << rendered.notes << "wrote " << o.output << " (" << rendered.width << " x " << rendered.height << " px)\n";
        });
    }
    if (pipeline->parsed()) {
        return guarded(err, [&] {
            const std::string stem = stem_of(o.output);
            Options stage = o;
            stage.insights_path = stem + ".insights.json";
            stage.analysis_path = stem + ".analysis.json";
            write_file(stage.insights_path, insights_text(stage, err));
            // Later stages read the files back, exactly as the staged commands do.
            Options organize_stage = stage;
            organize_stage.llm = "off";
            const auto organized = organize_text(organize_stage, err);
            write_file(stage.analysis_path, organized.json_text);
            out << organized.summary;
            const auto rendered = render_text(stage.analysis_path, read_json(stage.analysis_path), stage);
            write_file(o.output, rendered.svg);
            out << rendered.notes << "wrote " << stage.insights_path << ", " << stage.analysis_path << ", " << o.output << " ("
                << rendered.width << " x " << rendered.height << " px)\n";
        });
    }
    if (add->parsed()) {
        return guarded(err, [&] {
            const auto id = llm::template_from_string(t_template);
            if (!id) fail(kInputError, "unknown template '" + t_template + "'");
            llm::Bindings bindings;
            auto split = [&](const std::string& kv) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos || eq == 0) fail(kInputError, "binding '" + kv + "' is not KEY=VALUE");
                return std::pair{kv.substr(0, eq), kv.substr(eq + 1)};
            };
            for (const auto& kv : t_bind) {
                auto [k, v] = split(kv);
                bindings[k] = v;
            }
            for (const auto& kv : t_bind_file) {
                auto [k, path] = split(kv);
                bindings[k] = read_file(path);
            }
            const auto prompt = llm::render_prompt(*id, bindings);
            llm::Transcript file(t_path);
            file.upsert({prompt.hash, t_model, prompt.text, read_file(t_response),
                         t_timestamp.empty() ? llm::utc_timestamp() : t_timestamp});
            out << prompt.hash << "\n";
        });
    }
    return kInputError;
}

}  // namespace stratagem::cli
