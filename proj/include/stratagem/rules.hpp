#pragma once

#include "stratagem/ingest.hpp"
#include "stratagem/insight.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stratagem::insight {

/// Every firing threshold used by the rule engine. The business rules are
/// qualitative ("very low", "significant difference"), so each
/// cut-off here is an explicit choice pinned by tests.
namespace thresholds {
/// Minimum |fitted change over the window| / |series mean| for a trend.
inline constexpr double kTrendRelative = 0.02;
/// Share of successive deltas agreeing with the slope sign for "steady".
inline constexpr double kSteadyFraction = 0.80;
inline constexpr std::size_t kTrendMinPoints = 3;

/// online / (online + in-store) below this is a weak online channel.
inline constexpr double kOnlineShareLow = 0.15;
inline constexpr double kOnlineShareHigh = 0.50;

inline constexpr double kSentimentStrong = 0.85;
inline constexpr double kSentimentRisk = 0.50;
inline constexpr double kSentimentGap = 0.10;

/// Weekday-mean range must reach this many standard deviations of closes.
inline constexpr double kCycleSigma = 1.0;
/// ... and the weekday effect must be significant at this level (one-way ANOVA).
inline constexpr double kCycleAlpha = 0.05;
inline constexpr std::size_t kCycleMinPoints = 20;
inline constexpr std::size_t kCycleMinWeeks = 3;

inline constexpr double kSurpriseMedianFactor = 1.5;
/// Used when there is no surprise history: |surprise| / |expected|.
inline constexpr double kSurpriseRelative = 0.05;
}  // namespace thresholds

struct Diagnostic {
    std::string code;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

using Diagnostics = std::vector<Diagnostic>;

struct TrendSeries {
    std::vector<double> values;
    std::vector<std::string> labels;  // one per value, e.g. dates or quarters
};

struct TrendFit {
    double slope = 0.0;            // per step, least squares on index
    double relative_slope = 0.0;   // slope * (n - 1) / |mean|
    double relative_change = 0.0;  // (last - first) / |first|
    bool steady = false;
};

/// Least-squares summary used by trend_insight; exposed for tests and tooling.
std::optional<TrendFit> fit_trend(std::span<const double> values);

std::optional<Insight> trend_insight(const TrendSeries& series, const ingest::MetricDescriptor& metric);

std::optional<Insight> peer_comparison_insight(const ingest::Dataset& dataset, std::string_view subject,
                                               const ingest::MetricDescriptor& metric);

/// Share rule: numerator / (numerator + denominator) for the subject.
std::optional<Insight> ratio_insight(const ingest::Dataset& dataset, std::string_view subject,
                                     const ingest::MetricDescriptor& numerator,
                                     const ingest::MetricDescriptor& denominator,
                                     Diagnostics* diagnostics = nullptr);

struct SentimentChannel {
    std::string channel;  // e.g. "social media"
    std::size_t positive_metric = 0;
    std::size_t negative_metric = 0;
};

/// Pairs "Positive X sentiment" / "Negative X sentiment" metrics by channel X.
std::vector<SentimentChannel> find_sentiment_channels(const ingest::Dataset& dataset);

std::vector<Insight> sentiment_balance_insight(const ingest::Dataset& dataset, std::string_view subject);

std::optional<Insight> weekly_cycle_insight(const ingest::TimeSeries& series);

std::optional<Insight> benchmark_surprise_insight(double actual, double expected,
                                                  std::span<const double> prior_abs_surprises,
                                                  Diagnostics* diagnostics = nullptr);

/// Runs every applicable rule and returns a deduplicated list ordered by
/// magnitude (desc), then rule id, then metric name, then insight id.
std::vector<Insight> run_all_rules(const std::optional<ingest::Dataset>& dataset,
                                   const std::optional<ingest::TimeSeries>& series, std::string_view subject,
                                   Diagnostics* diagnostics = nullptr);

/// The deterministic order used by run_all_rules.
void sort_insights(std::vector<Insight>& insights);

}  // namespace stratagem::insight
