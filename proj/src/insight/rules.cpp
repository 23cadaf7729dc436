#include "stratagem/rules.hpp"

#include "text_util.hpp"

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

namespace stratagem::insight {

using detail::lower;
using detail::slugify;
using ingest::Dataset;
using ingest::MetricDescriptor;

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::string group_thousands(std::string digits) {
    const bool negative = !digits.empty() && digits.front() == '-';
    if (negative) digits.erase(0, 1);
    const auto point = digits.find('.');
    int pos = static_cast<int>(point == std::string::npos ? digits.size() : point) - 3;
    for (; pos > 0; pos -= 3) digits.insert(static_cast<std::size_t>(pos), ",");
    return negative ? "-" + digits : digits;
}

std::string display_number(double v) {
    const double rounded = std::round(v * 100.0) / 100.0;
    char buffer[64];
    if (std::abs(rounded - std::round(rounded)) < 1e-9) {
        std::snprintf(buffer, sizeof buffer, "%.0f", rounded);
        return group_thousands(buffer);
    }
    std::snprintf(buffer, sizeof buffer, "%.2f", rounded);
    std::string text = buffer;
    while (text.back() == '0') text.pop_back();
    return group_thousands(text);
}

std::string percent(double fraction, int decimals = 1) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.*f%%", decimals, fraction * 100.0);
    return buffer;
}

std::string capitalize(std::string text) {
    if (!text.empty()) text.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(text.front())));
    return text;
}

std::vector<ThemeTag> with_theme(std::vector<ThemeTag> themes, ThemeTag extra) {
    if (std::find(themes.begin(), themes.end(), extra) == themes.end()) themes.push_back(extra);
    std::sort(themes.begin(), themes.end());
    return themes;
}

Insight make_insight(RuleId rule, std::string id, const std::string& statement, Direction direction,
                     double magnitude, std::vector<ThemeTag> themes, std::vector<Evidence> evidence) {
    Insight insight;
    insight.id = std::string(to_string(rule)) + "/" + std::move(id);
    insight.statement = fit_statement(statement).value_or(statement);
    insight.direction = direction;
    insight.magnitude = clamp01(magnitude);
    insight.themes = std::move(themes);
    insight.evidence = std::move(evidence);
    insight.provenance = RuleProvenance{rule};
    return insight;
}

Direction direction_of(int s) {
    if (s > 0) return Direction::positive;
    if (s < 0) return Direction::negative;
    return Direction::neutral;
}

std::optional<double> subject_value(const Dataset& dataset, std::size_t subject, const MetricDescriptor& metric) {
    const auto m = dataset.find_metric(metric.name);
    if (!m) return std::nullopt;
    return dataset.value(subject, *m);
}

constexpr std::array<std::string_view, 7> kWeekdayNames{"Sunday",   "Monday", "Tuesday", "Wednesday",
                                                        "Thursday", "Friday", "Saturday"};

// Monday-first presentation order of chrono's Sunday-based encoding.
constexpr std::array<unsigned, 7> kMondayFirst{1, 2, 3, 4, 5, 6, 0};

std::string metric_of(const Insight& insight) {
    for (const auto& e : insight.evidence) {
        for (const auto& r : e.refs) {
            if (r.kind == Ref::Kind::metric) return r.name;
        }
    }
    return {};
}

/// Sortable day number for ISO dates, M/D/YYYY dates and quarter labels
/// ("Q1 2024", "2024 Q1", "2024-Q1").
std::optional<long> period_key(std::string_view label) {
    if (const auto date = ingest::parse_date(label)) {
        return std::chrono::sys_days{*date}.time_since_epoch().count();
    }
    const std::string text = lower(detail::trim(label));
    int quarter = 0;
    int year = 0;
    char tail = 0;
    if (std::sscanf(text.c_str(), "q%d %d%c", &quarter, &year, &tail) == 2 ||
        std::sscanf(text.c_str(), "%d q%d%c", &year, &quarter, &tail) == 2 ||
        std::sscanf(text.c_str(), "%d-q%d%c", &year, &quarter, &tail) == 2) {
        if (quarter >= 1 && quarter <= 4 && year >= 1000 && year <= 9999) {
            const ingest::Date start{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(quarter * 3 - 2)},
                                     std::chrono::day{1}};
            return std::chrono::sys_days{start}.time_since_epoch().count();
        }
    }
    return std::nullopt;
}

bool contains(const std::string& haystack, std::string_view needle) { return haystack.find(needle) != std::string::npos; }

}  // namespace

std::optional<TrendFit> fit_trend(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < thresholds::kTrendMinPoints) return std::nullopt;
    if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) return std::nullopt;

    const double mean_x = static_cast<double>(n - 1) / 2.0;
    const double mean_y = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - mean_x;
        sxy += dx * (values[i] - mean_y);
        sxx += dx * dx;
    }
    if (std::abs(mean_y) < 1e-12) return std::nullopt;

    TrendFit fit;
    fit.slope = sxy / sxx;
    fit.relative_slope = fit.slope * static_cast<double>(n - 1) / std::abs(mean_y);
    fit.relative_change = values.front() != 0.0 ? (values.back() - values.front()) / std::abs(values.front())
                                                : fit.relative_slope;

    const int slope_sign = (fit.slope > 0) - (fit.slope < 0);
    std::size_t agreeing = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const double delta = values[i] - values[i - 1];
        if (slope_sign != 0 && ((delta > 0) - (delta < 0)) == slope_sign) ++agreeing;
    }
    fit.steady = static_cast<double>(agreeing) >= thresholds::kSteadyFraction * static_cast<double>(n - 1);
    return fit;
}

std::optional<Insight> trend_insight(const TrendSeries& series, const MetricDescriptor& metric) {
    const auto fit = fit_trend(series.values);
    if (!fit || std::abs(fit->relative_slope) < thresholds::kTrendRelative) return std::nullopt;

    const std::size_t n = series.values.size();
    auto label = [&](std::size_t i) {
        return i < series.labels.size() ? series.labels[i] : "period " + std::to_string(i + 1);
    };
    const bool rising = fit->slope > 0;
    const double first = series.values.front();
    const double last = series.values.back();

    const std::string change = (fit->relative_change >= 0 ? "+" : "-") + percent(std::abs(fit->relative_change), 2);
    std::string statement = metric.name + (fit->steady ? " shows a steady " : " shows an uneven ") +
                            (rising ? "upward" : "downward") + " trend from " + display_number(first) + " to " +
                            display_number(last) + " between " + label(0) + " and " + label(n - 1) +
                            ", a change of " + change + ".";

    const int s = (rising ? 1 : -1) * ingest::polarity_sign(metric.polarity);
    std::vector<Evidence> evidence{
        {EvidenceKind::trend_slope, {metric_ref(metric.name), label_ref(label(0)), label_ref(label(n - 1))}, fit->slope},
        {EvidenceKind::metric_value, {metric_ref(metric.name), label_ref(label(0))}, first},
        {EvidenceKind::metric_value, {metric_ref(metric.name), label_ref(label(n - 1))}, last},
        {EvidenceKind::computed_ratio, {metric_ref(metric.name)}, fit->relative_change},
    };
    return make_insight(RuleId::trend, slugify(metric.name), statement, direction_of(s),
                        std::min(1.0, std::abs(fit->relative_change)),
                        with_theme(themes_for_text(metric.name), ThemeTag::growth), std::move(evidence));
}

std::optional<Insight> peer_comparison_insight(const Dataset& dataset, std::string_view subject,
                                               const MetricDescriptor& metric) {
    const auto m = dataset.find_metric(metric.name);
    const auto s = dataset.find_entity(subject);
    if (!m || !s) return std::nullopt;
    const auto subject_v = dataset.value(*s, *m);
    if (!subject_v) return std::nullopt;

    struct Entry {
        std::size_t entity;
        double value;
    };
    std::vector<Entry> entries;
    for (std::size_t e = 0; e < dataset.entities().size(); ++e) {
        if (auto v = dataset.value(e, *m)) entries.push_back({e, *v});
    }
    if (entries.size() < 2) return std::nullopt;

    double others_sum = 0.0;
    bool strictly_top = true;
    bool strictly_bottom = true;
    double lo = *subject_v;
    double hi = *subject_v;
    for (const auto& entry : entries) {
        lo = std::min(lo, entry.value);
        hi = std::max(hi, entry.value);
        if (entry.entity == *s) continue;
        others_sum += entry.value;
        if (entry.value >= *subject_v) strictly_top = false;
        if (entry.value <= *subject_v) strictly_bottom = false;
    }
    if (!strictly_top && !strictly_bottom) return std::nullopt;

    const double others_mean = others_sum / static_cast<double>(entries.size() - 1);
    const double magnitude = clamp01(std::abs(*subject_v - others_mean) / (hi - lo));
    const int s_sign = (strictly_top ? 1 : -1) * ingest::polarity_sign(metric.polarity);

    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.value > b.value; });
    std::vector<Evidence> evidence;
    for (const auto& entry : entries) {
        evidence.push_back({EvidenceKind::metric_value,
                            {metric_ref(metric.name), entity_ref(dataset.entities()[entry.entity])},
                            entry.value});
    }
    const double rank = strictly_top ? 1.0 : static_cast<double>(entries.size());
    evidence.push_back({EvidenceKind::rank, {metric_ref(metric.name), entity_ref(std::string(subject))}, rank});

    const std::string statement = std::string(subject) + " has the " + (strictly_top ? "highest " : "lowest ") +
                                  metric.name + " among " + std::to_string(entries.size()) +
                                  " compared companies at " + display_number(*subject_v) +
                                  ", against a peer average of " + display_number(others_mean) + ".";
    return make_insight(RuleId::peer_comparison, slugify(subject) + "/" + slugify(metric.name), statement,
                        direction_of(s_sign), magnitude,
                        with_theme(themes_for_text(metric.name), ThemeTag::competition), std::move(evidence));
}

std::optional<Insight> ratio_insight(const Dataset& dataset, std::string_view subject,
                                     const MetricDescriptor& numerator, const MetricDescriptor& denominator,
                                     Diagnostics* diagnostics) {
    const auto s = dataset.find_entity(subject);
    if (!s) return std::nullopt;
    const auto num = subject_value(dataset, *s, numerator);
    const auto den = subject_value(dataset, *s, denominator);
    if (!num || !den) return std::nullopt;
    auto diagnose = [&](std::string code, std::string message) {
        if (diagnostics) diagnostics->push_back({std::move(code), std::move(message)});
    };
    if (*num < 0.0 || *den < 0.0) {
        diagnose("NegativeValue", numerator.name + " / " + denominator.name + " share skipped: negative value");
        return std::nullopt;
    }
    const double total = *num + *den;
    if (total == 0.0) {
        diagnose("DivisionDomain", numerator.name + " and " + denominator.name + " are both zero for " +
                                       std::string(subject) + "; share undefined");
        return std::nullopt;
    }
    const double share = *num / total;
    const bool low = share < thresholds::kOnlineShareLow;
    const bool high = share > thresholds::kOnlineShareHigh;
    if (!low && !high) return std::nullopt;

    const std::string statement =
        numerator.name + (low ? " accounts for only " : " accounts for ") + percent(share) + " of combined " +
        numerator.name + " and " + denominator.name + " for " + std::string(subject) +
        (low ? ", leaving this channel underdeveloped." : ", making it the dominant channel.");
    std::vector<Evidence> evidence{
        {EvidenceKind::metric_value, {metric_ref(numerator.name), entity_ref(std::string(subject))}, *num},
        {EvidenceKind::metric_value, {metric_ref(denominator.name), entity_ref(std::string(subject))}, *den},
        {EvidenceKind::computed_ratio,
         {metric_ref(numerator.name), metric_ref(denominator.name), entity_ref(std::string(subject))},
         share},
    };
    auto themes = themes_for_text(numerator.name);
    if (themes.empty()) themes.push_back(ThemeTag::growth);
    if (contains(lower(numerator.name), "online")) themes = {ThemeTag::online_channel};
    return make_insight(RuleId::ratio_share,
                        slugify(subject) + "/" + slugify(numerator.name) + "/" + slugify(denominator.name), statement,
                        low ? Direction::negative : Direction::positive,
                        std::abs(share - thresholds::kOnlineShareLow) / (1.0 - thresholds::kOnlineShareLow),
                        std::move(themes), std::move(evidence));
}

std::vector<SentimentChannel> find_sentiment_channels(const Dataset& dataset) {
    std::map<std::string, std::pair<std::optional<std::size_t>, std::optional<std::size_t>>> by_channel;
    for (std::size_t m = 0; m < dataset.metrics().size(); ++m) {
        const std::string name = lower(dataset.metrics()[m].name);
        if (!contains(name, "sentiment")) continue;
        const bool positive = contains(name, "positive");
        const bool negative = contains(name, "negative");
        if (positive == negative) continue;
        std::vector<std::string> kept;
        for (const auto& word : detail::split_words(name)) {
            if (word != "positive" && word != "negative" && word != "sentiment") kept.push_back(word);
        }
        auto& slot = by_channel[detail::join(kept, " ")];
        (positive ? slot.first : slot.second) = m;
    }
    std::vector<SentimentChannel> channels;
    for (const auto& [channel, pair] : by_channel) {
        if (pair.first && pair.second) channels.push_back({channel, *pair.first, *pair.second});
    }
    return channels;
}

std::vector<Insight> sentiment_balance_insight(const Dataset& dataset, std::string_view subject) {
    std::vector<Insight> out;
    const auto s = dataset.find_entity(subject);
    if (!s) return out;

    struct Share {
        const SentimentChannel* channel;
        double share;
    };
    const auto channels = find_sentiment_channels(dataset);
    std::vector<Share> shares;
    const std::string who(subject);
    for (const auto& channel : channels) {
        const auto pos = dataset.value(*s, channel.positive_metric);
        const auto neg = dataset.value(*s, channel.negative_metric);
        if (!pos || !neg || *pos < 0.0 || *neg < 0.0 || *pos + *neg == 0.0) continue;
        const double share = *pos / (*pos + *neg);
        shares.push_back({&channel, share});

        const bool strong = share >= thresholds::kSentimentStrong;
        const bool risk = share <= thresholds::kSentimentRisk;
        if (!strong && !risk) continue;
        const auto& pos_name = dataset.metrics()[channel.positive_metric].name;
        const auto& neg_name = dataset.metrics()[channel.negative_metric].name;
        const std::string counts =
            " (" + display_number(*pos) + " positive vs " + display_number(*neg) + " negative)";
        const std::string statement =
            strong ? capitalize(channel.channel) + " sentiment toward " + who + " is strongly positive at " +
                         percent(share) + " positive" + counts + "."
                   : capitalize(channel.channel) + " sentiment toward " + who + " is only " + percent(share) +
                         " positive" + counts + ", a reputational risk.";
        const double midpoint = (thresholds::kSentimentStrong + thresholds::kSentimentRisk) / 2.0;
        const double half_width = (thresholds::kSentimentStrong - thresholds::kSentimentRisk) / 2.0;
        out.push_back(make_insight(
            RuleId::sentiment_balance, slugify(who) + "/" + slugify(channel.channel), statement,
            strong ? Direction::positive : Direction::negative, std::abs(share - midpoint) / half_width,
            {ThemeTag::public_sentiment},
            {
                {EvidenceKind::metric_value, {metric_ref(pos_name), entity_ref(who)}, *pos},
                {EvidenceKind::metric_value, {metric_ref(neg_name), entity_ref(who)}, *neg},
                {EvidenceKind::computed_ratio, {metric_ref(pos_name), metric_ref(neg_name), entity_ref(who)}, share},
            }));
    }

    for (std::size_t i = 0; i < shares.size(); ++i) {
        for (std::size_t j = i + 1; j < shares.size(); ++j) {
            const double gap = std::abs(shares[i].share - shares[j].share);
            if (gap < thresholds::kSentimentGap) continue;
            const auto& hi = shares[i].share >= shares[j].share ? shares[i] : shares[j];
            const auto& lo = shares[i].share >= shares[j].share ? shares[j] : shares[i];
            const std::string statement = capitalize(hi.channel->channel) + " sentiment toward " + who + " is " +
                                          percent(hi.share) + " positive versus " + percent(lo.share) + " for " +
                                          lo.channel->channel + ", a gap of " + display_number(gap * 100.0) +
                                          " percentage points.";
            auto share_evidence = [&](const Share& sh) {
                return Evidence{EvidenceKind::computed_ratio,
                                {metric_ref(dataset.metrics()[sh.channel->positive_metric].name),
                                 metric_ref(dataset.metrics()[sh.channel->negative_metric].name), entity_ref(who)},
                                sh.share};
            };
            out.push_back(make_insight(
                RuleId::sentiment_contrast,
                slugify(who) + "/" + slugify(shares[i].channel->channel) + "/" + slugify(shares[j].channel->channel),
                statement, Direction::neutral, gap / 0.5, {ThemeTag::public_sentiment},
                {share_evidence(hi), share_evidence(lo),
                 {EvidenceKind::computed_ratio,
                  {label_ref(hi.channel->channel), label_ref(lo.channel->channel), entity_ref(who)},
                  gap}}));
        }
    }
    return out;
}

std::optional<Insight> weekly_cycle_insight(const ingest::TimeSeries& series) {
    const auto& obs = series.observations;
    const std::size_t n = obs.size();
    if (n < thresholds::kCycleMinPoints) return std::nullopt;

    std::set<long> weeks;
    std::array<std::vector<double>, 7> by_weekday;
    for (const auto& o : obs) {
        const std::chrono::sys_days day{o.date};
        const std::chrono::weekday wd{day};
        const unsigned monday_index = (wd.c_encoding() + 6) % 7;
        weeks.insert((day - std::chrono::days{monday_index}).time_since_epoch().count());
        by_weekday[wd.c_encoding()].push_back(o.close);
    }
    if (weeks.size() < thresholds::kCycleMinWeeks) return std::nullopt;

    double grand = 0.0;
    for (const auto& o : obs) grand += o.close;
    grand /= static_cast<double>(n);
    double total_ss = 0.0;
    for (const auto& o : obs) total_ss += (o.close - grand) * (o.close - grand);
    const double sd = std::sqrt(total_ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) return std::nullopt;

    std::array<std::optional<double>, 7> means;
    std::size_t groups = 0;
    double between_ss = 0.0;
    double within_ss = 0.0;
    for (unsigned d = 0; d < 7; ++d) {
        const auto& values = by_weekday[d];
        if (values.empty()) continue;
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        means[d] = mean;
        ++groups;
        between_ss += static_cast<double>(values.size()) * (mean - grand) * (mean - grand);
        for (double v : values) within_ss += (v - mean) * (v - mean);
    }
    if (groups < 2 || n <= groups) return std::nullopt;

    std::optional<unsigned> low_day;
    std::optional<unsigned> high_day;
    for (unsigned d : kMondayFirst) {
        if (!means[d]) continue;
        if (!low_day || *means[d] < *means[*low_day]) low_day = d;
        if (!high_day || *means[d] > *means[*high_day]) high_day = d;
    }
    const double range = *means[*high_day] - *means[*low_day];
    if (range < thresholds::kCycleSigma * sd) return std::nullopt;

    const double df_between = static_cast<double>(groups - 1);
    const double df_within = static_cast<double>(n - groups);
    double p_value = 0.0;
    if (within_ss > 0.0) {
        const double f = (between_ss / df_between) / (within_ss / df_within);
        p_value = boost::math::cdf(boost::math::complement(boost::math::fisher_f(df_between, df_within), f));
    }
    if (p_value >= thresholds::kCycleAlpha) return std::nullopt;

    std::vector<Evidence> evidence;
    for (unsigned d : kMondayFirst) {
        if (means[d]) evidence.push_back({EvidenceKind::cycle_stat, {label_ref(std::string(kWeekdayNames[d]))}, *means[d]});
    }
    evidence.push_back({EvidenceKind::cycle_stat, {label_ref("range-over-sd")}, range / sd});
    evidence.push_back({EvidenceKind::cycle_stat, {label_ref("anova-p")}, p_value});

    const std::string statement = "Closing prices follow a weekly cycle: " + std::string(kWeekdayNames[*low_day]) +
                                  " closes average lowest at " + display_number(*means[*low_day]) + " and " +
                                  std::string(kWeekdayNames[*high_day]) + " closes highest at " +
                                  display_number(*means[*high_day]) + ", a spread of " +
                                  display_number(range / sd) + " standard deviations.";
    return make_insight(RuleId::weekly_cycle, "close", statement, Direction::neutral, range / (3.0 * sd),
                        {ThemeTag::growth}, std::move(evidence));
}

std::optional<Insight> benchmark_surprise_insight(double actual, double expected,
                                                  std::span<const double> prior_abs_surprises,
                                                  Diagnostics* diagnostics) {
    const double surprise = actual - expected;
    if (surprise == 0.0 || !std::isfinite(surprise)) return std::nullopt;

    double threshold = 0.0;
    std::string comparison;
    if (prior_abs_surprises.empty()) {
        if (expected == 0.0) {
            if (diagnostics) {
                diagnostics->push_back({"ZeroExpected", "expected value is zero and there is no surprise history"});
            }
            return std::nullopt;
        }
        threshold = thresholds::kSurpriseRelative * std::abs(expected);
        comparison = ", a " + percent(std::abs(surprise) / std::abs(expected)) + " surprise relative to expectations.";
    } else {
        std::vector<double> history;
        for (double v : prior_abs_surprises) history.push_back(std::abs(v));
        std::sort(history.begin(), history.end());
        const std::size_t k = history.size();
        const double median = k % 2 ? history[k / 2] : (history[k / 2 - 1] + history[k / 2]) / 2.0;
        threshold = thresholds::kSurpriseMedianFactor * median;
        comparison = median > 0.0 ? ", " + display_number(std::abs(surprise) / median) +
                                        " times the median prior surprise of " + display_number(median) + "."
                                  : ", while prior surprises were zero.";
    }
    if (!(std::abs(surprise) > threshold)) return std::nullopt;

    const bool beat = surprise > 0;
    const std::string statement = "Actual earnings of " + display_number(actual) + (beat ? " beat" : " missed") +
                                  " the expected " + display_number(expected) + " by " +
                                  display_number(std::abs(surprise)) + comparison;
    return make_insight(RuleId::benchmark_surprise, "earnings", statement,
                        beat ? Direction::positive : Direction::negative, 1.0 - threshold / std::abs(surprise),
                        {ThemeTag::profitability},
                        {
                            {EvidenceKind::metric_value, {label_ref("actual")}, actual},
                            {EvidenceKind::metric_value, {label_ref("expected")}, expected},
                            {EvidenceKind::computed_ratio, {label_ref("surprise")}, surprise},
                        });
}

void sort_insights(std::vector<Insight>& insights) {
    std::sort(insights.begin(), insights.end(), [](const Insight& a, const Insight& b) {
        if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
        const auto ra = std::holds_alternative<RuleProvenance>(a.provenance)
                            ? std::string(to_string(std::get<RuleProvenance>(a.provenance).rule))
                            : std::string("~llm");
        const auto rb = std::holds_alternative<RuleProvenance>(b.provenance)
                            ? std::string(to_string(std::get<RuleProvenance>(b.provenance).rule))
                            : std::string("~llm");
        if (ra != rb) return ra < rb;
        const auto ma = metric_of(a);
        const auto mb = metric_of(b);
        if (ma != mb) return ma < mb;
        return a.id < b.id;
    });
}

namespace {

void run_dataset_rules(const Dataset& dataset, std::string_view subject, std::vector<Insight>& out,
                       Diagnostics* diagnostics) {
    const auto& entities = dataset.entities();
    std::vector<std::pair<long, std::size_t>> periods;
    for (std::size_t e = 0; e < entities.size(); ++e) {
        if (const auto key = period_key(entities[e])) periods.emplace_back(*key, e);
    }
    if (periods.size() == entities.size() && periods.size() >= thresholds::kTrendMinPoints) {
        std::sort(periods.begin(), periods.end());
        for (std::size_t m = 0; m < dataset.metrics().size(); ++m) {
            TrendSeries series;
            for (const auto& [key, e] : periods) {
                if (auto v = dataset.value(e, m)) {
                    series.values.push_back(*v);
                    series.labels.push_back(entities[e]);
                }
            }
            if (auto insight = trend_insight(series, dataset.metrics()[m])) out.push_back(std::move(*insight));
        }
        return;
    }

    if (!dataset.find_entity(subject)) {
        if (diagnostics) {
            diagnostics->push_back({"UnknownSubject", "subject '" + std::string(subject) + "' is not in the table"});
        }
        return;
    }
    for (const auto& metric : dataset.metrics()) {
        if (auto insight = peer_comparison_insight(dataset, subject, metric)) out.push_back(std::move(*insight));
    }

    const MetricDescriptor* online = nullptr;
    const MetricDescriptor* in_store = nullptr;
    const MetricDescriptor* actual = nullptr;
    const MetricDescriptor* expected = nullptr;
    for (const auto& metric : dataset.metrics()) {
        const std::string name = lower(metric.name);
        const bool money = contains(name, "revenue") || contains(name, "sales");
        if (money && contains(name, "online") && !online) online = &metric;
        else if (money && (contains(name, "in-store") || contains(name, "in store") || contains(name, "offline")) &&
                 !in_store) in_store = &metric;
        const bool earnings = contains(name, "earnings") || contains(name, "eps");
        if (earnings && contains(name, "actual") && !actual) actual = &metric;
        else if (earnings && (contains(name, "expected") || contains(name, "estimate") || contains(name, "consensus")) &&
                 !expected) expected = &metric;
    }
    if (online && in_store) {
        if (auto insight = ratio_insight(dataset, subject, *online, *in_store, diagnostics)) {
            out.push_back(std::move(*insight));
        }
    }
    for (auto& insight : sentiment_balance_insight(dataset, subject)) out.push_back(std::move(insight));
    if (actual && expected) {
        const auto s = *dataset.find_entity(subject);
        const auto a = dataset.value(s, *dataset.find_metric(actual->name));
        const auto x = dataset.value(s, *dataset.find_metric(expected->name));
        if (a && x) {
            if (auto insight = benchmark_surprise_insight(*a, *x, {}, diagnostics)) out.push_back(std::move(*insight));
        }
    }
}

void run_series_rules(const ingest::TimeSeries& raw, std::vector<Insight>& out) {
    const auto series = ingest::normalize_order(raw);
    TrendSeries closes;
    TrendSeries volumes;
    for (const auto& o : series.observations) {
        const auto label = ingest::format_date(o.date);
        closes.values.push_back(o.close);
        closes.labels.push_back(label);
        volumes.values.push_back(o.volume);
        volumes.labels.push_back(label);
    }
    if (auto insight = trend_insight(closes, {"Closing price", ingest::MetricUnit::raw, ingest::Polarity::higher_is_better})) {
        out.push_back(std::move(*insight));
    }
    if (auto insight = trend_insight(volumes, {"Trading volume", ingest::MetricUnit::count, ingest::Polarity::neutral})) {
        out.push_back(std::move(*insight));
    }
    if (auto insight = weekly_cycle_insight(series)) out.push_back(std::move(*insight));
}

}  // namespace

std::vector<Insight> run_all_rules(const std::optional<Dataset>& dataset,
                                   const std::optional<ingest::TimeSeries>& series, std::string_view subject,
                                   Diagnostics* diagnostics) {
    std::vector<Insight> collected;
    if (dataset) run_dataset_rules(*dataset, subject, collected, diagnostics);
    if (series) run_series_rules(*series, collected);

    std::vector<Insight> unique;
    std::set<std::string> seen;
    for (auto& insight : collected) {
        if (seen.insert(insight.id).second) unique.push_back(std::move(insight));
    }
    sort_insights(unique);
    return unique;
}

}  // namespace stratagem::insight
