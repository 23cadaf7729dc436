#include "stratagem/ingest.hpp"

#include "text_util.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace stratagem::ingest {

using detail::lower;
using detail::trim;

IngestError::IngestError(Kind kind, std::size_t line, const std::string& message)
    : std::runtime_error(message), kind_(kind), line_(line) {}

std::string_view to_string(IngestError::Kind kind) {
    switch (kind) {
        case IngestError::Kind::empty_input: return "EmptyInput";
        case IngestError::Kind::ragged_rows: return "RaggedRows";
        case IngestError::Kind::no_numeric_data: return "NoNumericData";
        case IngestError::Kind::invalid_header: return "InvalidHeader";
        case IngestError::Kind::unparseable_date: return "UnparseableDate";
        case IngestError::Kind::non_positive_price: return "NonPositivePrice";
        case IngestError::Kind::duplicate_date: return "DuplicateDate";
        case IngestError::Kind::malformed_row: return "MalformedRow";
    }
    return "Unknown";
}

std::string_view to_string(MetricUnit unit) {
    switch (unit) {
        case MetricUnit::count: return "count";
        case MetricUnit::currency_millions: return "currency-millions";
        case MetricUnit::percent: return "percent";
        case MetricUnit::days: return "days";
        case MetricUnit::raw: return "raw";
    }
    return "raw";
}

std::string_view to_string(Polarity polarity) {
    switch (polarity) {
        case Polarity::higher_is_better: return "higher-is-better";
        case Polarity::lower_is_better: return "lower-is-better";
        case Polarity::neutral: return "neutral";
    }
    return "neutral";
}

int polarity_sign(Polarity polarity) {
    switch (polarity) {
        case Polarity::higher_is_better: return 1;
        case Polarity::lower_is_better: return -1;
        case Polarity::neutral: return 0;
    }
    return 0;
}

namespace {

struct UnitRule {
    std::string_view keyword;
    MetricUnit unit;
};

struct PolarityRule {
    std::string_view keyword;
    Polarity polarity;
};

// First match wins. Keywords are matched against the lower-cased name.
constexpr std::array kUnitRules{
    UnitRule{"($m)", MetricUnit::currency_millions},
    UnitRule{"$m", MetricUnit::currency_millions},
    UnitRule{"(m)", MetricUnit::currency_millions},
    UnitRule{"revenue", MetricUnit::currency_millions},
    UnitRule{"income", MetricUnit::currency_millions},
    UnitRule{"%", MetricUnit::percent},
    UnitRule{"percent", MetricUnit::percent},
    UnitRule{"survey", MetricUnit::percent},
    UnitRule{"margin", MetricUnit::percent},
    UnitRule{"share", MetricUnit::percent},
    UnitRule{"delays", MetricUnit::days},
    UnitRule{"delay", MetricUnit::days},
    UnitRule{"days", MetricUnit::days},
    UnitRule{"number", MetricUnit::count},
    UnitRule{"count", MetricUnit::count},
    UnitRule{"sentiment", MetricUnit::count},
    UnitRule{"stores", MetricUnit::count},
    UnitRule{"employees", MetricUnit::count},
};

// Lower-is-better cues are checked first so that e.g. "Negative ... media
// sentiment" is not caught by the "media" cue.
constexpr std::array kPolarityRules{
    PolarityRule{"delay", Polarity::lower_is_better},
    PolarityRule{"negative", Polarity::lower_is_better},
    PolarityRule{"cost", Polarity::lower_is_better},
    PolarityRule{"debt", Polarity::lower_is_better},
    PolarityRule{"churn", Polarity::lower_is_better},
    PolarityRule{"complaint", Polarity::lower_is_better},
    PolarityRule{"return rate", Polarity::lower_is_better},
    PolarityRule{"revenue", Polarity::higher_is_better},
    PolarityRule{"positive", Polarity::higher_is_better},
    PolarityRule{"awareness", Polarity::higher_is_better},
    PolarityRule{"income", Polarity::higher_is_better},
    PolarityRule{"profit", Polarity::higher_is_better},
    PolarityRule{"margin", Polarity::higher_is_better},
    PolarityRule{"sales", Polarity::higher_is_better},
    PolarityRule{"growth", Polarity::higher_is_better},
    PolarityRule{"countries", Polarity::higher_is_better},
    PolarityRule{"stores", Polarity::higher_is_better},
    PolarityRule{"categories", Polarity::higher_is_better},
    PolarityRule{"media spend", Polarity::higher_is_better},
    PolarityRule{"marketing", Polarity::higher_is_better},
    PolarityRule{"earnings", Polarity::higher_is_better},
};

struct Annotated {
    std::string name;
    std::optional<Polarity> override_polarity;
};

Annotated strip_annotation(std::string_view raw) {
    const std::string_view text = trim(raw);
    static constexpr std::array<std::pair<std::string_view, Polarity>, 3> kSuffixes{{
        {"!lower", Polarity::lower_is_better},
        {"!higher", Polarity::higher_is_better},
        {"!neutral", Polarity::neutral},
    }};
    for (const auto& [suffix, polarity] : kSuffixes) {
        if (text.size() > suffix.size() && text.ends_with(suffix)) {
            return {std::string(trim(text.substr(0, text.size() - suffix.size()))), polarity};
        }
    }
    return {std::string(text), std::nullopt};
}

MetricDescriptor describe(std::string_view raw_header) {
    auto annotated = strip_annotation(raw_header);
    auto descriptor = infer_metric_semantics(annotated.name);
    if (annotated.override_polarity) descriptor.polarity = *annotated.override_polarity;
    return descriptor;
}

std::string annotate(const MetricDescriptor& metric) {
    const auto inferred = infer_metric_semantics(metric.name).polarity;
    if (metric.polarity == inferred) return metric.name;
    switch (metric.polarity) {
        case Polarity::lower_is_better: return metric.name + "!lower";
        case Polarity::higher_is_better: return metric.name + "!higher";
        case Polarity::neutral: return metric.name + "!neutral";
    }
    return metric.name;
}

std::vector<std::string> split_fields(std::string_view line, Dialect dialect) {
    std::vector<std::string> fields;
    if (dialect == Dialect::tab) {
        std::size_t start = 0;
        while (true) {
            const auto pos = line.find('\t', start);
            fields.emplace_back(trim(line.substr(start, pos - start)));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return fields;
    }
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.emplace_back(trim(current));
    return fields;
}

std::string quote_field(std::string_view field, Dialect dialect) {
    if (dialect == Dialect::tab) return std::string(field);
    if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::optional<double> parse_number(std::string_view cell) {
    std::string_view text = trim(cell);
    if (text.empty()) return std::nullopt;
    bool negative = false;
    if (text.front() == '-' || text.front() == '+') {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    if (!text.empty() && text.front() == '$') text.remove_prefix(1);
    if (!text.empty() && text.back() == '%') text.remove_suffix(1);
    if (text.empty()) return std::nullopt;

    std::string digits;
    const auto comma = text.find(',');
    if (comma != std::string_view::npos) {
        // Thousands separators must group exactly three digits.
        const auto dot = text.find('.');
        const std::string_view integral = text.substr(0, dot);
        std::size_t group_start = 0;
        bool first = true;
        while (true) {
            const auto next = integral.find(',', group_start);
            const auto group = integral.substr(group_start, next - group_start);
            const bool digits_only =
                !group.empty() && std::all_of(group.begin(), group.end(), [](char c) {
                    return std::isdigit(static_cast<unsigned char>(c));
                });
            if (!digits_only) return std::nullopt;
            if (first ? group.size() > 3 : group.size() != 3) return std::nullopt;
            digits.append(group);
            first = false;
            if (next == std::string_view::npos) break;
            group_start = next + 1;
        }
        if (dot != std::string_view::npos) digits.append(text.substr(dot));
    } else {
        digits.assign(text);
    }
    if (digits.empty() || !(std::isdigit(static_cast<unsigned char>(digits.front())) || digits.front() == '.')) {
        return std::nullopt;
    }
    double value = 0.0;
    const auto* begin = digits.data();
    const auto* end = digits.data() + digits.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return negative ? -value : value;
}

struct Line {
    std::size_t number;
    std::string_view text;
};

std::vector<Line> content_lines(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    std::vector<Line> lines;
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        ++number;
        std::string_view line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) lines.push_back({number, line});
        start = pos + 1;
    }
    return lines;
}

bool has_letter(std::string_view text) {
    return std::any_of(text.begin(), text.end(),
                       [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

std::size_t semantic_hits(const std::vector<std::string>& labels) {
    return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](const std::string& label) {
        const auto d = describe(label);
        return d.unit != MetricUnit::raw || d.polarity != Polarity::neutral;
    }));
}

enum class Orientation { metrics_as_rows, entities_as_rows };

Orientation detect_orientation(std::string_view corner,
                               const std::vector<std::string>& header_labels,
                               const std::vector<std::string>& row_labels) {
    const std::string key = lower(trim(corner));
    static const std::set<std::string, std::less<>> kMetricCorner{"metric", "metrics", "measure", "kpi", "field"};
    static const std::set<std::string, std::less<>> kEntityCorner{"entity", "entities", "company", "companies",
                                                                  "name", "competitor", "firm"};
    if (kMetricCorner.contains(key)) return Orientation::metrics_as_rows;
    if (kEntityCorner.contains(key)) return Orientation::entities_as_rows;
    return semantic_hits(header_labels) > semantic_hits(row_labels) ? Orientation::entities_as_rows
                                                                     : Orientation::metrics_as_rows;
}

void require_unique(const std::vector<std::string>& names, std::string_view what) {
    std::set<std::string_view> seen;
    for (const auto& name : names) {
        if (name.empty()) {
            throw IngestError(IngestError::Kind::invalid_header, 1, std::string("empty ") + std::string(what) + " name");
        }
        if (!seen.insert(name).second) {
            throw IngestError(IngestError::Kind::invalid_header, 1,
                              "duplicate " + std::string(what) + " name '" + name + "'");
        }
    }
}

}  // namespace

MetricDescriptor infer_metric_semantics(std::string_view name) {
    MetricDescriptor descriptor;
    descriptor.name = std::string(trim(name));
    const std::string key = lower(descriptor.name);
    for (const auto& rule : kUnitRules) {
        if (key.find(rule.keyword) != std::string::npos) {
            descriptor.unit = rule.unit;
            break;
        }
    }
    for (const auto& rule : kPolarityRules) {
        if (key.find(rule.keyword) != std::string::npos) {
            descriptor.polarity = rule.polarity;
            break;
        }
    }
    return descriptor;
}

Dataset::Dataset(std::vector<std::string> entities,
                 std::vector<MetricDescriptor> metrics,
                 std::vector<std::optional<double>> values)
    : entities_(std::move(entities)), metrics_(std::move(metrics)), values_(std::move(values)) {
    if (entities_.empty()) throw std::invalid_argument("dataset needs at least one entity");
    if (values_.size() != entities_.size() * metrics_.size()) {
        throw std::invalid_argument("dataset value matrix has wrong dimensions");
    }
    std::vector<std::string> metric_names;
    metric_names.reserve(metrics_.size());
    for (const auto& m : metrics_) metric_names.push_back(m.name);
    for (const auto& [names, what] : {std::pair{&entities_, "entity"}, std::pair{&metric_names, "metric"}}) {
        std::set<std::string_view> seen;
        for (const auto& n : *names) {
            if (n.empty() || !seen.insert(n).second) {
                throw std::invalid_argument(std::string("empty or duplicate ") + what + " name '" + n + "'");
            }
        }
    }
}

std::optional<double> Dataset::value(std::size_t entity, std::size_t metric) const {
    return values_.at(entity * metrics_.size() + metric);
}

std::optional<std::size_t> Dataset::find_entity(std::string_view name) const {
    const auto it = std::find(entities_.begin(), entities_.end(), name);
    if (it == entities_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - entities_.begin());
}

std::optional<std::size_t> Dataset::find_metric(std::string_view name) const {
    const auto it = std::find_if(metrics_.begin(), metrics_.end(), [&](const auto& m) { return m.name == name; });
    if (it == metrics_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - metrics_.begin());
}

std::size_t Dataset::absent_count() const {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::nullopt));
}

Dataset Dataset::with_subject(std::string_view name) const {
    const auto index = find_entity(name);
    if (!index) throw std::invalid_argument("unknown entity '" + std::string(name) + "'");
    std::vector<std::size_t> order{*index};
    for (std::size_t e = 0; e < entities_.size(); ++e) {
        if (e != *index) order.push_back(e);
    }
    std::vector<std::string> entities;
    std::vector<std::optional<double>> values;
    for (auto e : order) {
        entities.push_back(entities_[e]);
        for (std::size_t m = 0; m < metrics_.size(); ++m) values.push_back(value(e, m));
    }
    return Dataset(std::move(entities), metrics_, std::move(values));
}

Dialect detect_dialect(std::string_view text) {
    const auto lines = content_lines(text);
    if (!lines.empty() && lines.front().text.find('\t') != std::string_view::npos) return Dialect::tab;
    return Dialect::comma;
}

Dataset parse_table(std::string_view text, Dialect dialect) {
    const auto lines = content_lines(text);
    if (lines.empty()) throw IngestError(IngestError::Kind::empty_input, 0, "input is empty");

    const auto header = split_fields(lines.front().text, dialect);
    if (header.size() < 2) {
        throw IngestError(IngestError::Kind::invalid_header, lines.front().number,
                          "header needs a label column and at least one data column");
    }
    std::vector<std::string> header_labels(header.begin() + 1, header.end());

    std::vector<std::string> row_labels;
    std::vector<std::vector<std::optional<double>>> rows;
    std::size_t numeric_cells = 0;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r].text, dialect);
        if (fields.size() != header.size()) {
            std::ostringstream msg;
            msg << "row " << r << " (line " << lines[r].number << ") has " << fields.size() << " cells, expected "
                << header.size();
            throw IngestError(IngestError::Kind::ragged_rows, lines[r].number, msg.str());
        }
        row_labels.push_back(fields.front());
        auto& row = rows.emplace_back();
        for (std::size_t c = 1; c < fields.size(); ++c) {
            row.push_back(parse_number(fields[c]));
            if (row.back()) ++numeric_cells;
        }
    }
    if (rows.empty() || numeric_cells == 0) {
        throw IngestError(IngestError::Kind::no_numeric_data, 0, "table has no numeric data");
    }

    const auto orientation = detect_orientation(header.front(), header_labels, row_labels);
    const auto& metric_labels = orientation == Orientation::metrics_as_rows ? row_labels : header_labels;
    auto entities = orientation == Orientation::metrics_as_rows ? header_labels : row_labels;

    std::vector<MetricDescriptor> metrics;
    std::vector<std::string> metric_names;
    for (const auto& label : metric_labels) {
        metrics.push_back(describe(label));
        metric_names.push_back(metrics.back().name);
    }
    require_unique(entities, "entity");
    require_unique(metric_names, "metric");

    std::vector<std::optional<double>> values;
    values.reserve(entities.size() * metrics.size());
    for (std::size_t e = 0; e < entities.size(); ++e) {
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            values.push_back(orientation == Orientation::metrics_as_rows ? rows[m][e] : rows[e][m]);
        }
    }
    return Dataset(std::move(entities), std::move(metrics), std::move(values));
}

std::optional<Date> parse_date(std::string_view raw) {
    const std::string_view text = trim(raw);
    auto parse_int = [](std::string_view part, std::size_t min_len, std::size_t max_len) -> std::optional<int> {
        if (part.size() < min_len || part.size() > max_len) return std::nullopt;
        int value = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (ec != std::errc{} || ptr != part.data() + part.size()) return std::nullopt;
        return value;
    };
    std::optional<int> y, m, d;
    if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
        y = parse_int(text.substr(0, 4), 4, 4);
        m = parse_int(text.substr(5, 2), 2, 2);
        d = parse_int(text.substr(8, 2), 2, 2);
    } else {
        const auto first = text.find('/');
        const auto second = first == std::string_view::npos ? first : text.find('/', first + 1);
        if (second == std::string_view::npos) return std::nullopt;
        m = parse_int(text.substr(0, first), 1, 2);
        d = parse_int(text.substr(first + 1, second - first - 1), 1, 2);
        y = parse_int(text.substr(second + 1), 4, 4);
    }
    if (!y || !m || !d || *m < 1 || *d < 1) return std::nullopt;
    const Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

std::string format_date(Date date) {
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buffer;
}

TimeSeries parse_timeseries(std::string_view text) {
    const auto lines = content_lines(text);
    if (lines.empty()) throw IngestError(IngestError::Kind::empty_input, 0, "input is empty");
    const Dialect dialect =
        lines.front().text.find('\t') != std::string_view::npos ? Dialect::tab : Dialect::comma;

    std::size_t date_col = 0, close_col = 1, volume_col = 2;
    std::size_t first_data = 0;
    const auto first_fields = split_fields(lines.front().text, dialect);
    if (!parse_date(first_fields.front()) && has_letter(first_fields.front())) {
        first_data = 1;
        std::optional<std::size_t> date, close, price, volume;
        for (std::size_t c = 0; c < first_fields.size(); ++c) {
            const std::string name = lower(first_fields[c]);
            if (!date && (name == "date" || name == "day" || name == "timestamp")) date = c;
            else if (!close && (name == "close" || name == "closing price" || name == "close price" ||
                                name == "close/last")) close = c;
            else if (!price && (name == "price" || name == "adj close" || name == "adj. close")) price = c;
            else if (!volume && (name == "volume" || name == "vol" || name == "vol.")) volume = c;
        }
        if (!close) close = price;
        if (!date || !close || !volume) {
            throw IngestError(IngestError::Kind::invalid_header, lines.front().number,
                              "timeseries header must name date, close and volume columns");
        }
        date_col = *date;
        close_col = *close;
        volume_col = *volume;
    }
    const std::size_t needed = std::max({date_col, close_col, volume_col}) + 1;

    TimeSeries series;
    std::map<std::chrono::sys_days, std::size_t> seen;
    for (std::size_t i = first_data; i < lines.size(); ++i) {
        const auto& line = lines[i];
        const auto fields = split_fields(line.text, dialect);
        if (fields.size() < needed) {
            throw IngestError(IngestError::Kind::malformed_row, line.number,
                              "line " + std::to_string(line.number) + " has too few columns");
        }
        const auto date = parse_date(fields[date_col]);
        if (!date) {
            throw IngestError(IngestError::Kind::unparseable_date, line.number,
                              "line " + std::to_string(line.number) + ": unparseable date '" + fields[date_col] + "'");
        }
        const auto close = parse_number(fields[close_col]);
        if (!close) {
            throw IngestError(IngestError::Kind::malformed_row, line.number,
                              "line " + std::to_string(line.number) + ": unparseable close '" + fields[close_col] + "'");
        }
        if (!(*close > 0.0)) {
            throw IngestError(IngestError::Kind::non_positive_price, line.number,
                              "line " + std::to_string(line.number) + ": close must be positive");
        }
        const auto volume = parse_number(fields[volume_col]);
        if (!volume || *volume < 0.0) {
            throw IngestError(IngestError::Kind::malformed_row, line.number,
                              "line " + std::to_string(line.number) + ": volume must be a non-negative number");
        }
        const auto [it, inserted] = seen.emplace(std::chrono::sys_days{*date}, line.number);
        if (!inserted) {
            throw IngestError(IngestError::Kind::duplicate_date, line.number,
                              "line " + std::to_string(line.number) + ": date " + format_date(*date) +
                                  " already appears on line " + std::to_string(it->second));
        }
        series.observations.push_back({*date, *close, *volume});
    }
    if (series.observations.empty()) {
        throw IngestError(IngestError::Kind::empty_input, 0, "timeseries has no observations");
    }
    return normalize_order(std::move(series));
}

TimeSeries normalize_order(TimeSeries series) {
    std::stable_sort(series.observations.begin(), series.observations.end(),
                     [](const Observation& a, const Observation& b) {
                         return std::chrono::sys_days{a.date} < std::chrono::sys_days{b.date};
                     });
    return series;
}

std::string format_number(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ec == std::errc{} ? ptr : buffer);
}

std::string write_table(const Dataset& dataset, Dialect dialect) {
    const char sep = dialect == Dialect::tab ? '\t' : ',';
    std::string out = "Metric";
    for (const auto& entity : dataset.entities()) {
        out.push_back(sep);
        out += quote_field(entity, dialect);
    }
    out.push_back('\n');
    for (std::size_t m = 0; m < dataset.metrics().size(); ++m) {
        out += quote_field(annotate(dataset.metrics()[m]), dialect);
        for (std::size_t e = 0; e < dataset.entities().size(); ++e) {
            out.push_back(sep);
            const auto v = dataset.value(e, m);
            out += v ? format_number(*v) : "NA";
        }
        out.push_back('\n');
    }
    return out;
}

std::string write_timeseries(const TimeSeries& series, Dialect dialect) {
    const char sep = dialect == Dialect::tab ? '\t' : ',';
    std::string out = std::string("date") + sep + "close" + sep + "volume\n";
    for (const auto& obs : series.observations) {
        out += format_date(obs.date);
        out.push_back(sep);
        out += format_number(obs.close);
        out.push_back(sep);
        out += format_number(obs.volume);
        out.push_back('\n');
    }
    return out;
}

}  // namespace stratagem::ingest
