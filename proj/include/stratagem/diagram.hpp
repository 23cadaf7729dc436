#pragma once

#include "stratagem/frameworks.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stratagem::diagram {

class DiagramError : public std::runtime_error {
public:
    enum class Kind { invalid_input, layout_overflow, invariant_violation, invalid_style };
    DiagramError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Advance widths in 1/1000 em for printable ASCII; everything else uses `fallback`.
class FontMetrics {
public:
    FontMetrics(std::string name, const std::array<double, 95>& ascii, double fallback = 600.0);

    /// Helvetica / Arial advance table.
    static const FontMetrics& sans();

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] double advance(char32_t c) const;
    /// size * sum(advances) / 1000, over UTF-8 code points.
    [[nodiscard]] double measure(std::string_view text, double size) const;

private:
    std::string name_;
    std::array<double, 95> ascii_;
    double fallback_;
};

inline constexpr double kLineHeight = 1.3;

struct TextBlock {
    std::vector<std::string> lines;
    double font_size = 0.0;
    double x = 0.0;  // top-left of the allotted area
    double y = 0.0;
    double width = 0.0;  // allotted area
    double height = 0.0;
    /// Bounds the size was chosen within; kept so fit optimality stays checkable.
    double min_font = 10.0;
    double max_font = 28.0;
    bool centered = false;
    std::string source;  // unwrapped text

    [[nodiscard]] double line_height() const { return kLineHeight * font_size; }
    [[nodiscard]] double text_height() const { return static_cast<double>(lines.size()) * line_height(); }
};

/// Greedy wrap at one size. Words wider than `width` are hyphen-split;
/// nullopt when even a single character does not fit.
std::optional<std::vector<std::string>> wrap_text(std::string_view text, double width, double size,
                                                  const FontMetrics& metrics);

struct FitResult {
    enum class Status { ok, does_not_fit, unbreakable };
    Status status = Status::ok;
    TextBlock block;
    /// For does_not_fit: height the wrapped text needs at min_font.
    double required_height = 0.0;
};

/// Largest integer size in [min_font, max_font] whose wrap fits w x h.
FitResult fit_text(std::string_view text, double width, double height, const FontMetrics& metrics,
                   double min_font = 10.0, double max_font = 28.0);

/// True when `text` wraps into w x h at `size`.
bool fits_at(std::string_view text, double width, double height, double size, const FontMetrics& metrics);

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Rect {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    [[nodiscard]] double right() const { return x + w; }
    [[nodiscard]] double bottom() const { return y + h; }
    [[nodiscard]] Point center() const { return {x + w / 2.0, y + h / 2.0}; }
};

struct BoxNode {
    std::string id;
    Rect rect;
    TextBlock title;
    std::vector<TextBlock> body;
    std::string fill;
    std::string border;
    double border_width = 1.5;
};

struct ArrowEdge {
    std::string from;
    std::string to;
    std::vector<Point> points;
};

struct RadarShape {
    Point center;
    double radius = 0.0;
    std::vector<std::string> axes;
    std::vector<double> angles;  // radians, SVG orientation (y down)
    std::vector<double> scores;  // 0..10
    std::vector<Point> vertices;
    std::vector<double> rings{2.0, 4.0, 6.0, 8.0, 10.0};
};

struct Palette {
    std::string background = "#FFFFFF";
    std::string box_fill = "#F4F6F9";
    std::string border = "#44546A";
    std::string text = "#1F2933";
    std::string arrow = "#44546A";
    std::string attention = "#CC0000";
    std::string radar_fill = "#9FC5E8";
    std::string radar_stroke = "#1F4E79";
};

struct Style {
    double canvas_width = 960.0;
    double canvas_height = 720.0;
    double min_font = 10.0;
    double max_font = 28.0;
    /// Upper bound for factor text; titles may use the full max_font.
    double body_max_font = 18.0;
    double padding = 6.0;
    std::string font_family = "Helvetica, Arial, 'Liberation Sans', sans-serif";
    Palette palette;
};

/// {"canvas": {"width", "height"}, "font": {"min", "max", "body_max", "family"},
///  "padding", "palette": {...}}; missing keys keep defaults.
Style style_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Style& style);

enum class Arrangement { grid, hub_spoke, cycle, radar };

struct DiagramSpec {
    double width = 0.0;
    double height = 0.0;
    Arrangement arrangement = Arrangement::grid;
    std::optional<TextBlock> title;
    std::vector<BoxNode> boxes;
    std::vector<ArrowEdge> arrows;
    std::optional<RadarShape> radar;
    Style style;
};

/// Fill for a Porter risk level; the one palette every diagram uses.
std::string_view risk_color(frameworks::RiskLevel level);

DiagramSpec layout_grid(const frameworks::OrganizedAnalysis& analysis, const Style& style = {},
                        const FontMetrics& metrics = FontMetrics::sans());
DiagramSpec layout_hub_spoke(const frameworks::OrganizedAnalysis& analysis, const Style& style = {},
                             const FontMetrics& metrics = FontMetrics::sans());
DiagramSpec layout_cycle(const frameworks::OrganizedAnalysis& analysis, const Style& style = {},
                         const FontMetrics& metrics = FontMetrics::sans());
DiagramSpec layout_radar(const frameworks::OrganizedAnalysis& analysis, const Style& style = {},
                         const FontMetrics& metrics = FontMetrics::sans());

/// Picks the layout named by the analysis schema.
DiagramSpec layout(const frameworks::OrganizedAnalysis& analysis, const Style& style = {},
                   const FontMetrics& metrics = FontMetrics::sans());

/// Every DiagramSpec invariant; empty when the spec is sound.
std::vector<std::string> check_spec(const DiagramSpec& spec, const FontMetrics& metrics = FontMetrics::sans());

/// Throws DiagramError(invariant_violation) when check_spec finds a problem.
std::string emit_svg(const DiagramSpec& spec, const FontMetrics& metrics = FontMetrics::sans());

std::string render_svg(const frameworks::OrganizedAnalysis& analysis, const Style& style = {});

}  // namespace stratagem::diagram
