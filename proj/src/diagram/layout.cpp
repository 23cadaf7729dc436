#include "stratagem/diagram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace stratagem::diagram {

using frameworks::AxisScore;
using frameworks::OrganizedAnalysis;
using frameworks::RiskLevel;

namespace {

constexpr double kMargin = 16.0;
constexpr double kTitleBand = 56.0;
constexpr int kMaxDoublings = 8;
// Canvas and boxes grow in half-doubling steps so a small shortfall does not double the page.
constexpr int kMaxGrowth = 2 * kMaxDoublings;
const double kGrowStep = std::sqrt(2.0);

enum class Shortfall { none, height, width };

struct BoxAttempt {
    BoxNode box;
    Shortfall shortfall = Shortfall::none;
    std::string culprit;  // the text that did not fit, for error messages
};

std::string quoted(std::string_view what, std::string_view box, std::string_view text) {
    std::string shown(text.substr(0, 60));
    if (text.size() > 60) shown += "...";
    return std::string(what) + " '" + shown + "' in " + std::string(box);
}

Shortfall shortfall_of(const FitResult& r) {
    switch (r.status) {
        case FitResult::Status::ok: return Shortfall::none;
        case FitResult::Status::does_not_fit: return Shortfall::height;
        case FitResult::Status::unbreakable: return Shortfall::width;
    }
    return Shortfall::height;
}

/// Title on top at its fitted height; factors stacked below at one shared size,
/// the largest at which the whole stack fits. Each factor block is exactly as
/// tall as its lines, so one size larger would overflow it.
BoxAttempt fill_box(std::string id, Rect rect, const std::string& title, const std::vector<std::string>& factors,
                    const Style& style, const FontMetrics& metrics, double title_max) {
    BoxAttempt attempt;
    auto& box = attempt.box;
    box.id = std::move(id);
    box.rect = rect;
    box.fill = style.palette.box_fill;
    box.border = style.palette.border;

    const double ix = rect.x + style.padding;
    const double iy = rect.y + style.padding;
    const double iw = rect.w - 2.0 * style.padding;
    const double ih = rect.h - 2.0 * style.padding;
    if (iw <= 0.0 || ih <= 0.0) {
        attempt.shortfall = iw <= 0.0 ? Shortfall::width : Shortfall::height;
        attempt.culprit = quoted("title", box.id, title);
        return attempt;
    }
    const double title_cap = factors.empty() ? ih : std::min(ih * 0.3, 2.0 * kLineHeight * title_max);
    auto title_fit = fit_text(title, iw, title_cap, metrics, style.min_font, title_max);
    if (title_fit.status != FitResult::Status::ok) {
        attempt.shortfall = shortfall_of(title_fit);
        attempt.culprit = quoted("title", box.id, title);
        return attempt;
    }
    box.title = std::move(title_fit.block);
    box.title.x = ix;
    box.title.y = iy;
    box.title.centered = true;
    if (factors.empty()) return attempt;
    box.title.height = box.title.text_height();

    const double gap = 6.0;
    const double body_y = iy + box.title.height + gap;
    const double available = iy + ih - body_y - gap * static_cast<double>(factors.size() - 1);
    const int hi = static_cast<int>(std::floor(style.body_max_font));
    const int lo = static_cast<int>(std::ceil(style.min_font));
    for (int size = hi; size >= lo; --size) {
        std::vector<std::vector<std::string>> wrapped;
        double needed = 0.0;
        for (const auto& factor : factors) {
            auto lines = wrap_text("• " + factor, iw, size, metrics);
            if (!lines) {
                attempt.shortfall = Shortfall::width;
                attempt.culprit = quoted("factor", box.id, factor);
                return attempt;
            }
            needed += static_cast<double>(lines->size()) * kLineHeight * size;
            wrapped.push_back(std::move(*lines));
        }
        if (needed > available + 1e-9) continue;
        double y = body_y;
        for (std::size_t k = 0; k < factors.size(); ++k) {
            TextBlock block;
            block.lines = std::move(wrapped[k]);
            block.font_size = size;
            block.x = ix;
            block.y = y;
            block.width = iw;
            block.height = block.text_height();
            block.min_font = style.min_font;
            block.max_font = style.body_max_font;
            block.source = "• " + factors[k];
            y += block.height + gap;
            box.body.push_back(std::move(block));
        }
        return attempt;
    }
    attempt.shortfall = Shortfall::height;
    const auto longest = std::max_element(factors.begin(), factors.end(),
                                          [](const auto& a, const auto& b) { return a.size() < b.size(); });
    attempt.culprit = quoted("factor", box.id, *longest);
    return attempt;
}

std::vector<std::string> statements(const frameworks::SlotAssignment& slot) {
    std::vector<std::string> out;
    for (const auto& f : slot.factors) out.push_back(f.insight.statement);
    return out;
}

std::string diagram_title(const OrganizedAnalysis& analysis) {
    std::string title = analysis.schema.name;
    if (!analysis.subject.empty()) title += ": " + analysis.subject;
    return title;
}

std::optional<TextBlock> title_block(const OrganizedAnalysis& analysis, double width, const Style& style,
                                     const FontMetrics& metrics, Shortfall& shortfall) {
    auto fit = fit_text(diagram_title(analysis), width - 2.0 * kMargin, kTitleBand - 8.0, metrics, style.min_font,
                        style.max_font);
    if (fit.status != FitResult::Status::ok) {
        shortfall = shortfall_of(fit);
        return std::nullopt;
    }
    fit.block.x = kMargin;
    fit.block.y = 4.0;
    fit.block.centered = true;
    return fit.block;
}

void require_valid(const OrganizedAnalysis& analysis) {
    const auto violations = frameworks::validate_analysis(analysis);
    if (!violations.empty()) {
        throw DiagramError(DiagramError::Kind::invalid_input,
                           "analysis is not valid: " + violations.front().message);
    }
}

void grow(Shortfall s, double& w, double& h) {
    if (s == Shortfall::width) w *= kGrowStep;
    else h *= kGrowStep;
}

[[noreturn]] void overflow(std::string what) {
    if (what.empty()) what = "diagram title";
    throw DiagramError(DiagramError::Kind::layout_overflow,
                       what + " does not fit even after " + std::to_string(kMaxDoublings) + " doublings");
}

bool rects_clear(const Rect& a, const Rect& b, double gap) {
    return a.right() + gap <= b.x || b.right() + gap <= a.x || a.bottom() + gap <= b.y || b.bottom() + gap <= a.y;
}

bool inside(const Rect& r, Point p) { return p.x > r.x && p.x < r.right() && p.y > r.y && p.y < r.bottom(); }

}  // namespace

std::string_view risk_color(RiskLevel level) {
    switch (level) {
        case RiskLevel::low: return "#D9EAD3";
        case RiskLevel::moderate: return "#FFF2CC";
        case RiskLevel::high: return "#F9CB9C";
        case RiskLevel::intense: return "#EA9999";
    }
    return "#D9EAD3";
}

DiagramSpec layout_grid(const OrganizedAnalysis& analysis, const Style& style, const FontMetrics& metrics) {
    require_valid(analysis);
    const std::size_t n = analysis.slots.size();
    const std::size_t cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)))));
    const std::size_t rows = (n + cols - 1) / cols;
    double w = style.canvas_width;
    double h = style.canvas_height;
    std::string culprit;
    for (int attempt = 0; attempt <= kMaxGrowth; ++attempt) {
        DiagramSpec spec;
        spec.arrangement = Arrangement::grid;
        spec.style = style;
        spec.width = w;
        spec.height = h;
        Shortfall shortfall = Shortfall::none;
        spec.title = title_block(analysis, w, style, metrics, shortfall);
        if (shortfall != Shortfall::none) culprit = "diagram title";
        const double cell_w = (w - 2.0 * kMargin) / static_cast<double>(cols);
        const double cell_h = (h - kTitleBand - 2.0 * kMargin) / static_cast<double>(std::max<std::size_t>(rows, 1));
        for (std::size_t i = 0; i < n && shortfall == Shortfall::none; ++i) {
            const Rect rect{kMargin + cell_w * static_cast<double>(i % cols),
                            kTitleBand + kMargin + cell_h * static_cast<double>(i / cols), cell_w, cell_h};
            auto filled = fill_box(analysis.schema.slots[i].id, rect, analysis.schema.slots[i].title,
                                   statements(analysis.slots[i]), style, metrics, style.max_font);
            shortfall = filled.shortfall;
            if (shortfall != Shortfall::none) culprit = filled.culprit;
            spec.boxes.push_back(std::move(filled.box));
        }
        if (shortfall == Shortfall::none) return spec;
        grow(shortfall, w, h);
    }
    overflow(culprit);
}

DiagramSpec layout_hub_spoke(const OrganizedAnalysis& analysis, const Style& style, const FontMetrics& metrics) {
    require_valid(analysis);
    const auto& schema = analysis.schema;
    if (analysis.slots.size() != 5 || !schema.central_slot) {
        throw DiagramError(DiagramError::Kind::invalid_input, "hub layout needs five slots with one central");
    }
    std::vector<RiskLevel> levels;
    for (const auto& slot : analysis.slots) {
        const auto* level = std::get_if<RiskLevel>(&slot.attribute);
        if (!level) throw DiagramError(DiagramError::Kind::invalid_input, "hub layout needs a risk level per slot");
        levels.push_back(*level);
    }
    const RiskLevel worst = *std::max_element(levels.begin(), levels.end());
    const std::size_t center = *schema.central_slot;
    std::vector<std::size_t> satellites;
    for (std::size_t i = 0; i < 5; ++i) {
        if (i != center) satellites.push_back(i);
    }

    const double gap = 48.0;
    double w = style.canvas_width;
    double h = style.canvas_height;
    std::string culprit;
    for (int attempt = 0; attempt <= kMaxGrowth; ++attempt) {
        DiagramSpec spec;
        spec.arrangement = Arrangement::hub_spoke;
        spec.style = style;
        spec.width = w;
        spec.height = h;
        Shortfall shortfall = Shortfall::none;
        spec.title = title_block(analysis, w, style, metrics, shortfall);
        if (shortfall != Shortfall::none) culprit = "diagram title";
        const double bw = (w - 2.0 * kMargin - 2.0 * gap) / 3.0;
        const double bh = (h - kTitleBand - 2.0 * kMargin - 2.0 * gap) / 3.0;
        const double x0 = kMargin;
        const double y0 = kTitleBand + kMargin;
        const Rect mid{x0 + bw + gap, y0 + bh + gap, bw, bh};
        // Satellites in slot order go west, east, north, south.
        const std::array<Rect, 4> around{
            Rect{x0, mid.y, bw, bh},
            Rect{x0 + 2.0 * (bw + gap), mid.y, bw, bh},
            Rect{mid.x, y0, bw, bh},
            Rect{mid.x, y0 + 2.0 * (bh + gap), bw, bh},
        };
        auto place = [&](std::size_t slot, const Rect& rect) {
            const std::string title = schema.slots[slot].title + " (risk: " + std::string(frameworks::to_string(levels[slot])) + ")";
            auto filled = fill_box(schema.slots[slot].id, rect, title, statements(analysis.slots[slot]), style, metrics,
                                   std::min(style.max_font, 20.0));
            if (shortfall == Shortfall::none && filled.shortfall != Shortfall::none) {
                shortfall = filled.shortfall;
                culprit = filled.culprit;
            }
            filled.box.fill = std::string(risk_color(levels[slot]));
            if (levels[slot] == worst) {
                filled.box.border = style.palette.attention;
                filled.box.border_width = 4.0;
            }
            spec.boxes.push_back(std::move(filled.box));
        };
        place(center, mid);
        for (std::size_t k = 0; k < satellites.size(); ++k) place(satellites[k], around[k]);

        const std::array<std::pair<Point, Point>, 4> ends{
            std::pair{Point{around[0].right(), mid.center().y}, Point{mid.x, mid.center().y}},
            std::pair{Point{around[1].x, mid.center().y}, Point{mid.right(), mid.center().y}},
            std::pair{Point{mid.center().x, around[2].bottom()}, Point{mid.center().x, mid.y}},
            std::pair{Point{mid.center().x, around[3].y}, Point{mid.center().x, mid.bottom()}},
        };
        for (std::size_t k = 0; k < satellites.size(); ++k) {
            spec.arrows.push_back({schema.slots[satellites[k]].id, schema.slots[center].id,
                                   {ends[k].first, ends[k].second}});
        }
        if (shortfall == Shortfall::none && bw > 0 && bh > 0) return spec;
        grow(shortfall == Shortfall::none ? Shortfall::height : shortfall, w, h);
    }
    overflow(culprit);
}

DiagramSpec layout_cycle(const OrganizedAnalysis& analysis, const Style& style, const FontMetrics& metrics) {
    require_valid(analysis);
    const auto& schema = analysis.schema;
    const std::size_t n = analysis.slots.size();
    if (n < 3 || n > 8) throw DiagramError(DiagramError::Kind::invalid_input, "cycle layout needs 3 to 8 stages");

    const double pi = std::numbers::pi;
    std::vector<double> angles;
    for (std::size_t k = 0; k < n; ++k) angles.push_back(2.0 * pi * static_cast<double>(k) / static_cast<double>(n) - pi / 2.0);

    double bw = style.canvas_width / 4.0;
    double bh = style.canvas_height / 4.2;
    const double clearance = 40.0;  // room for the arc between neighbours
    std::string culprit;
    for (int attempt = 0; attempt <= kMaxGrowth; ++attempt) {
        Shortfall shortfall = Shortfall::none;
        for (std::size_t k = 0; k < n && shortfall == Shortfall::none; ++k) {
            auto filled = fill_box(schema.slots[k].id, Rect{0, 0, bw, bh}, schema.slots[k].title,
                                   statements(analysis.slots[k]), style, metrics, std::min(style.max_font, 20.0));
            shortfall = filled.shortfall;
            culprit = filled.culprit;
        }
        if (shortfall != Shortfall::none) {
            grow(shortfall, bw, bh);
            continue;
        }

        auto rect_at = [&](double r, std::size_t k, Point c) {
            return Rect{c.x + r * std::cos(angles[k]) - bw / 2.0, c.y + r * std::sin(angles[k]) - bh / 2.0, bw, bh};
        };
        double r = std::max(bw, bh) / 2.0;
        for (;; r += 4.0) {
            bool clear = true;
            for (std::size_t i = 0; i < n && clear; ++i) {
                for (std::size_t j = i + 1; j < n && clear; ++j) {
                    clear = rects_clear(rect_at(r, i, {}), rect_at(r, j, {}), clearance);
                }
            }
            if (clear) break;
        }

        DiagramSpec spec;
        spec.arrangement = Arrangement::cycle;
        spec.style = style;
        double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const auto rect = rect_at(r, k, {});
            min_x = std::min(min_x, rect.x);
            max_x = std::max(max_x, rect.right());
            min_y = std::min(min_y, rect.y);
            max_y = std::max(max_y, rect.bottom());
        }
        spec.width = std::max(style.canvas_width, max_x - min_x + 2.0 * kMargin);
        spec.height = std::max(style.canvas_height, max_y - min_y + kTitleBand + 2.0 * kMargin);
        const Point c{spec.width / 2.0 - (max_x + min_x) / 2.0,
                      kTitleBand + kMargin + (spec.height - kTitleBand - 2.0 * kMargin) / 2.0 - (max_y + min_y) / 2.0};
        spec.title = title_block(analysis, spec.width, style, metrics, shortfall);
        if (shortfall != Shortfall::none) culprit = "diagram title";
        if (shortfall != Shortfall::none) {
            grow(shortfall, bw, bh);
            continue;
        }
        std::vector<Rect> rects;
        for (std::size_t k = 0; k < n; ++k) {
            rects.push_back(rect_at(r, k, c));
            spec.boxes.push_back(fill_box(schema.slots[k].id, rects.back(), schema.slots[k].title,
                                          statements(analysis.slots[k]), style, metrics, std::min(style.max_font, 20.0))
                                     .box);
        }

        // Arcs along the layout circle, clipped to the box boundaries.
        auto on_circle = [&](double t) { return Point{c.x + r * std::cos(t), c.y + r * std::sin(t)}; };
        auto boundary = [&](const Rect& box, double t_in, double t_out) {
            for (int it = 0; it < 60; ++it) {
                const double mid = (t_in + t_out) / 2.0;
                if (inside(box, on_circle(mid))) t_in = mid;
                else t_out = mid;
            }
            return t_out;
        };
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t next = (k + 1) % n;
            const double a = angles[k];
            const double b = a + 2.0 * pi / static_cast<double>(n);
            const int samples = 96;
            double t_exit = a;
            double t_enter = b;
            for (int s = 1; s <= samples; ++s) {
                const double t = a + (b - a) * s / samples;
                if (!inside(rects[k], on_circle(t))) {
                    t_exit = boundary(rects[k], a + (b - a) * (s - 1) / samples, t);
                    break;
                }
            }
            for (int s = samples - 1; s >= 0; --s) {
                const double t = a + (b - a) * s / samples;
                if (!inside(rects[next], on_circle(t))) {
                    t_enter = boundary(rects[next], a + (b - a) * (s + 1) / samples, t);
                    break;
                }
            }
            ArrowEdge arrow{schema.slots[k].id, schema.slots[next].id, {}};
            const int steps = 24;
            for (int s = 0; s <= steps; ++s) arrow.points.push_back(on_circle(t_exit + (t_enter - t_exit) * s / steps));
            spec.arrows.push_back(std::move(arrow));
        }
        return spec;
    }
    overflow(culprit);
}

DiagramSpec layout_radar(const OrganizedAnalysis& analysis, const Style& style, const FontMetrics& metrics) {
    require_valid(analysis);
    const auto& schema = analysis.schema;
    const std::size_t n = analysis.slots.size();
    if (n < 3) throw DiagramError(DiagramError::Kind::invalid_input, "radar layout needs at least 3 axes");

    const double pi = std::numbers::pi;
    RadarShape radar;
    for (std::size_t k = 0; k < n; ++k) {
        const auto* score = std::get_if<AxisScore>(&analysis.slots[k].attribute);
        if (!score) throw DiagramError(DiagramError::Kind::invalid_input, "radar layout needs an axis score per slot");
        radar.axes.push_back(schema.slots[k].title);
        radar.scores.push_back(std::clamp(score->value, 0.0, 10.0));
        radar.angles.push_back(-pi / 2.0 + 2.0 * pi * static_cast<double>(k) / static_cast<double>(n));
    }
    radar.radius = std::min(style.canvas_width, style.canvas_height) * 0.25;

    std::vector<std::string> legend;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& factors = analysis.slots[k].factors;
        for (std::size_t f = 0; f < factors.size() && f < 2; ++f) {
            legend.push_back(schema.slots[k].title + ": " + factors[f].insight.statement);
        }
    }

    double label_w = 190.0;
    double label_h = 72.0;
    double legend_h = style.canvas_height - kTitleBand - 2.0 * kMargin;
    const double label_gap = 12.0;
    std::string culprit;
    for (int attempt = 0; attempt <= kMaxGrowth; ++attempt) {
        // Geometry relative to the plot center first, then shifted onto the canvas.
        std::vector<Rect> labels;
        double min_x = -radar.radius, max_x = radar.radius, min_y = -radar.radius, max_y = radar.radius;
        for (std::size_t k = 0; k < n; ++k) {
            const double ux = std::cos(radar.angles[k]);
            const double uy = std::sin(radar.angles[k]);
            const double support = std::abs(ux) * label_w / 2.0 + std::abs(uy) * label_h / 2.0;
            const double d = radar.radius + label_gap + support;
            labels.push_back({ux * d - label_w / 2.0, uy * d - label_h / 2.0, label_w, label_h});
            min_x = std::min(min_x, labels.back().x);
            max_x = std::max(max_x, labels.back().right());
            min_y = std::min(min_y, labels.back().y);
            max_y = std::max(max_y, labels.back().bottom());
        }
        const Point c{kMargin - min_x, kTitleBand + kMargin - min_y};
        const double legend_x = c.x + max_x + 32.0;
        const double legend_w = std::max(300.0, style.canvas_width - legend_x - kMargin);

        DiagramSpec spec;
        spec.arrangement = Arrangement::radar;
        spec.style = style;
        spec.width = std::max(style.canvas_width, legend_x + legend_w + kMargin);
        spec.height = std::max({style.canvas_height, max_y - min_y + kTitleBand + 2.0 * kMargin,
                                legend_h + kTitleBand + 2.0 * kMargin});
        Shortfall shortfall = Shortfall::none;
        spec.title = title_block(analysis, spec.width, style, metrics, shortfall);
        if (shortfall != Shortfall::none) culprit = "diagram title";

        for (std::size_t k = 0; k < n && shortfall == Shortfall::none; ++k) {
            Rect rect = labels[k];
            rect.x += c.x;
            rect.y += c.y;
            char score[32];
            std::snprintf(score, sizeof score, "%.1f / 10", radar.scores[k]);
            auto filled = fill_box(schema.slots[k].id, rect, radar.axes[k] + ": " + score, {}, style,
                                   metrics, std::min(style.max_font, 18.0));
            if (filled.shortfall != Shortfall::none) {
                culprit = filled.culprit;
                label_w *= 1.5;
                label_h *= 1.5;
                shortfall = Shortfall::width;
                break;
            }
            spec.boxes.push_back(std::move(filled.box));
        }
        if (shortfall != Shortfall::none) continue;

        auto legend_box = fill_box("legend", Rect{legend_x, kTitleBand + kMargin, legend_w, spec.height - kTitleBand - 2.0 * kMargin},
                                   "Key factors", legend, style, metrics, std::min(style.max_font, 20.0));
        if (legend_box.shortfall != Shortfall::none) {
            culprit = legend_box.culprit;
            legend_h = (spec.height - kTitleBand - 2.0 * kMargin) * kGrowStep;
            continue;
        }
        spec.boxes.push_back(std::move(legend_box.box));

        radar.center = c;
        radar.vertices.clear();
        for (std::size_t k = 0; k < n; ++k) {
            const double dist = radar.radius * radar.scores[k] / 10.0;
            radar.vertices.push_back({c.x + dist * std::cos(radar.angles[k]), c.y + dist * std::sin(radar.angles[k])});
        }
        spec.radar = radar;
        return spec;
    }
    overflow(culprit);
}

DiagramSpec layout(const OrganizedAnalysis& analysis, const Style& style, const FontMetrics& metrics) {
    switch (analysis.schema.layout) {
        case frameworks::Layout::grid: return layout_grid(analysis, style, metrics);
        case frameworks::Layout::hub_spoke: return layout_hub_spoke(analysis, style, metrics);
        case frameworks::Layout::cycle: return layout_cycle(analysis, style, metrics);
        case frameworks::Layout::radar: return layout_radar(analysis, style, metrics);
    }
    return layout_grid(analysis, style, metrics);
}

}  // namespace stratagem::diagram
