#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stratagem::ingest {

enum class MetricUnit { count, currency_millions, percent, days, raw };
enum class Polarity { higher_is_better, lower_is_better, neutral };

std::string_view to_string(MetricUnit unit);
std::string_view to_string(Polarity polarity);

struct MetricDescriptor {
    std::string name;
    MetricUnit unit = MetricUnit::raw;
    Polarity polarity = Polarity::neutral;

    bool operator==(const MetricDescriptor&) const = default;
};

/// Infers unit and polarity for a metric from keyword tables on its name.
/// Never fails; unknown names fall back to raw/neutral.
MetricDescriptor infer_metric_semantics(std::string_view name);

/// +1 for higher-is-better, -1 for lower-is-better, 0 for neutral.
int polarity_sign(Polarity polarity);

enum class Dialect { tab, comma };

class IngestError : public std::runtime_error {
public:
    enum class Kind {
        empty_input,
        ragged_rows,
        no_numeric_data,
        invalid_header,
        unparseable_date,
        non_positive_price,
        duplicate_date,
        malformed_row,
    };

    IngestError(Kind kind, std::size_t line, const std::string& message);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    /// 1-based line (or row) number in the input; 0 when not line-specific.
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    Kind kind_;
    std::size_t line_;
};

std::string_view to_string(IngestError::Kind kind);

/// Entity x metric table. The first entity is the analysis subject.
class Dataset {
public:
    Dataset(std::vector<std::string> entities,
            std::vector<MetricDescriptor> metrics,
            std::vector<std::optional<double>> values);

    [[nodiscard]] const std::vector<std::string>& entities() const noexcept { return entities_; }
    [[nodiscard]] const std::vector<MetricDescriptor>& metrics() const noexcept { return metrics_; }
    [[nodiscard]] const std::string& subject() const noexcept { return entities_.front(); }

    [[nodiscard]] std::optional<double> value(std::size_t entity, std::size_t metric) const;
    [[nodiscard]] std::optional<std::size_t> find_entity(std::string_view name) const;
    [[nodiscard]] std::optional<std::size_t> find_metric(std::string_view name) const;
    [[nodiscard]] std::size_t absent_count() const;

    /// Copy with `name` moved to the front. Throws std::invalid_argument if unknown.
    [[nodiscard]] Dataset with_subject(std::string_view name) const;

    bool operator==(const Dataset&) const = default;

private:
    std::vector<std::string> entities_;
    std::vector<MetricDescriptor> metrics_;
    std::vector<std::optional<double>> values_;  // row-major: entity * |metrics| + metric
};

using Date = std::chrono::year_month_day;

struct Observation {
    Date date;
    double close = 0.0;
    double volume = 0.0;

    bool operator==(const Observation&) const = default;
};

struct TimeSeries {
    std::vector<Observation> observations;

    bool operator==(const TimeSeries&) const = default;
};

/// Accepts exactly YYYY-MM-DD and M/D/YYYY.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

/// Parses a header-first delimited table. Orientation (metrics as rows or as
/// columns) is detected from the header; see README for the rule.
Dataset parse_table(std::string_view text, Dialect dialect);

/// Guesses the dialect from the first non-blank line.
Dialect detect_dialect(std::string_view text);

TimeSeries parse_timeseries(std::string_view text);

/// Stable ascending sort by date.
TimeSeries normalize_order(TimeSeries series);

/// Canonical delimited form: metrics as rows, entities as columns, "NA" for absent.
std::string write_table(const Dataset& dataset, Dialect dialect = Dialect::tab);
std::string write_timeseries(const TimeSeries& series, Dialect dialect = Dialect::tab);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

}  // namespace stratagem::ingest
