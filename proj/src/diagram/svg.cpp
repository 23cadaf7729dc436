#include "stratagem/diagram.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace stratagem::diagram {

namespace {

constexpr double kEps = 1e-6;

std::string num(double v) {
    if (std::abs(v) < 0.005) v = 0.0;
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

bool within(const Rect& outer, const Rect& inner) {
    return inner.x >= outer.x - kEps && inner.y >= outer.y - kEps && inner.right() <= outer.right() + kEps &&
           inner.bottom() <= outer.bottom() + kEps;
}

bool strictly_inside(const Rect& r, Point p) {
    return p.x > r.x + kEps && p.x < r.right() - kEps && p.y > r.y + kEps && p.y < r.bottom() - kEps;
}

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double boundary_distance(const Rect& r, Point p) {
    const double dx = std::max({r.x - p.x, 0.0, p.x - r.right()});
    const double dy = std::max({r.y - p.y, 0.0, p.y - r.bottom()});
    if (dx > 0.0 || dy > 0.0) return std::hypot(dx, dy);
    return std::min({p.x - r.x, r.right() - p.x, p.y - r.y, r.bottom() - p.y});
}

void check_block(const TextBlock& block, const Rect& area, const Style& style, const FontMetrics& metrics,
                 const std::string& where, std::vector<std::string>& problems) {
    if (block.lines.empty()) return;
    const double lo = std::max(style.min_font, block.min_font);
    const double hi = std::min(style.max_font, block.max_font);
    if (block.font_size < lo - kEps || block.font_size > hi + kEps) {
        problems.push_back(where + ": font size " + num(block.font_size) + " outside its bounds");
    }
    for (const auto& line : block.lines) {
        if (metrics.measure(line, block.font_size) > block.width + kEps) {
            problems.push_back(where + ": line wider than its block");
        }
    }
    if (block.text_height() > block.height + kEps) problems.push_back(where + ": text taller than its block");
    if (!within(area, Rect{block.x, block.y, block.width, block.height})) {
        problems.push_back(where + ": text block outside its area");
    }
}

}  // namespace

std::vector<std::string> check_spec(const DiagramSpec& spec, const FontMetrics& metrics) {
    std::vector<std::string> problems;
    const Rect canvas{0.0, 0.0, spec.width, spec.height};
    if (spec.width <= 0.0 || spec.height <= 0.0) problems.push_back("canvas has no area");
    if (spec.title) check_block(*spec.title, canvas, spec.style, metrics, "title", problems);

    const double pad = spec.style.padding;
    for (const auto& box : spec.boxes) {
        if (!within(canvas, box.rect)) problems.push_back(box.id + ": box outside the canvas");
        const Rect interior{box.rect.x + pad, box.rect.y + pad, box.rect.w - 2.0 * pad, box.rect.h - 2.0 * pad};
        check_block(box.title, interior, spec.style, metrics, box.id + " title", problems);
        for (const auto& block : box.body) check_block(block, interior, spec.style, metrics, box.id + " body", problems);
    }
    const bool edges_shared = spec.arrangement == Arrangement::grid;
    for (std::size_t i = 0; i < spec.boxes.size(); ++i) {
        for (std::size_t j = i + 1; j < spec.boxes.size(); ++j) {
            const auto& a = spec.boxes[i].rect;
            const auto& b = spec.boxes[j].rect;
            const double ox = std::min(a.right(), b.right()) - std::max(a.x, b.x);
            const double oy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
            const bool overlap = edges_shared ? (ox > kEps && oy > kEps) : (ox >= -kEps && oy >= -kEps);
            if (overlap) problems.push_back(spec.boxes[i].id + " overlaps " + spec.boxes[j].id);
        }
    }

    auto find_box = [&](const std::string& id) -> const BoxNode* {
        for (const auto& box : spec.boxes) {
            if (box.id == id) return &box;
        }
        return nullptr;
    };
    for (const auto& arrow : spec.arrows) {
        const std::string name = "arrow " + arrow.from + "->" + arrow.to;
        const auto* from = find_box(arrow.from);
        const auto* to = find_box(arrow.to);
        if (!from || !to || arrow.points.size() < 2) {
            problems.push_back(name + ": dangling or degenerate");
            continue;
        }
        const Point start = arrow.points.front();
        const Point end = arrow.points.back();
        if (boundary_distance(from->rect, start) > 0.5) problems.push_back(name + ": does not start on its box");
        if (boundary_distance(to->rect, end) > 0.5) problems.push_back(name + ": does not end on its box");
        for (std::size_t s = 0; s + 1 < arrow.points.size(); ++s) {
            const Point p = arrow.points[s];
            const Point q = arrow.points[s + 1];
            const int steps = std::max(1, static_cast<int>(std::ceil(dist(p, q))));
            for (int k = 0; k <= steps; ++k) {
                const double t = static_cast<double>(k) / steps;
                const Point sample{p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t};
                if (dist(sample, start) <= 2.0 || dist(sample, end) <= 2.0) continue;
                for (const auto& box : spec.boxes) {
                    if (strictly_inside(box.rect, sample)) {
                        problems.push_back(name + ": passes through " + box.id);
                        k = steps + 1;
                        s = arrow.points.size();
                        break;
                    }
                }
            }
        }
    }

    if (spec.radar) {
        const auto& r = *spec.radar;
        const std::size_t n = r.axes.size();
        if (r.angles.size() != n || r.scores.size() != n || r.vertices.size() != n) {
            problems.push_back("radar: axis, score and vertex counts differ");
        } else {
            for (std::size_t k = 0; k < n; ++k) {
                const double ux = std::cos(r.angles[k]);
                const double uy = std::sin(r.angles[k]);
                const double dx = r.vertices[k].x - r.center.x;
                const double dy = r.vertices[k].y - r.center.y;
                const double along = dx * ux + dy * uy;
                const double off = std::abs(-dx * uy + dy * ux);
                const double want = r.radius * r.scores[k] / 10.0;
                if (off > 0.01 || along < -0.01) problems.push_back("radar: vertex " + std::to_string(k) + " off its spoke");
                if (std::abs(along - want) > std::max(1e-3 * want, 1e-6)) {
                    problems.push_back("radar: vertex " + std::to_string(k) + " at the wrong distance");
                }
            }
            const Rect plot{r.center.x - r.radius, r.center.y - r.radius, 2.0 * r.radius, 2.0 * r.radius};
            if (!within(canvas, plot)) problems.push_back("radar: plot outside the canvas");
            for (const auto& box : spec.boxes) {
                const double ring_gap = boundary_distance(box.rect, r.center);
                if (!strictly_inside(box.rect, r.center) && ring_gap < r.radius - kEps) {
                    problems.push_back("radar: " + box.id + " overlaps the outer ring");
                }
            }
        }
    }
    return problems;
}

namespace {

void emit_text(std::string& out, const TextBlock& block, const Style& style) {
    const double lh = block.line_height();
    for (std::size_t i = 0; i < block.lines.size(); ++i) {
        const double baseline = block.y + static_cast<double>(i) * lh + 0.95 * block.font_size;
        const double x = block.centered ? block.x + block.width / 2.0 : block.x;
        out += "<text x=\"" + num(x) + "\" y=\"" + num(baseline) + "\" font-size=\"" + num(block.font_size) +
               "\" fill=\"" + escape(style.palette.text) + "\"";
        if (block.centered) out += " text-anchor=\"middle\"";
        out += ">" + escape(block.lines[i]) + "</text>\n";
    }
}

std::string points_attr(const std::vector<Point>& points) {
    std::string s;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) s += ' ';
        s += num(points[i].x) + "," + num(points[i].y);
    }
    return s;
}

}  // namespace

std::string emit_svg(const DiagramSpec& spec, const FontMetrics& metrics) {
    const auto problems = check_spec(spec, metrics);
    if (!problems.empty()) {
        throw DiagramError(DiagramError::Kind::invariant_violation, "diagram failed validation: " + problems.front());
    }
    const auto& style = spec.style;
    const auto& pal = style.palette;
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(spec.width) + "\" height=\"" +
           num(spec.height) + "\" viewBox=\"0.00 0.00 " + num(spec.width) + " " + num(spec.height) +
           "\" font-family=\"" + escape(style.font_family) + "\">\n";
    if (!spec.arrows.empty()) {
        out += "<defs><marker id=\"arrowhead\" markerWidth=\"10.00\" markerHeight=\"7.00\" refX=\"10.00\" "
               "refY=\"3.50\" orient=\"auto\" markerUnits=\"userSpaceOnUse\"><polygon points=\"0.00,0.00 10.00,3.50 "
               "0.00,7.00\" fill=\"" + escape(pal.arrow) + "\"/></marker></defs>\n";
    }
    out += "<rect x=\"0.00\" y=\"0.00\" width=\"" + num(spec.width) + "\" height=\"" + num(spec.height) +
           "\" fill=\"" + escape(pal.background) + "\"/>\n";

    for (const auto& box : spec.boxes) {
        out += "<rect id=\"" + escape(box.id) + "\" x=\"" + num(box.rect.x) + "\" y=\"" + num(box.rect.y) +
               "\" width=\"" + num(box.rect.w) + "\" height=\"" + num(box.rect.h) + "\" fill=\"" + escape(box.fill) +
               "\" stroke=\"" + escape(box.border) + "\" stroke-width=\"" + num(box.border_width) + "\"/>\n";
    }
    if (spec.radar) {
        const auto& r = *spec.radar;
        for (double ring : r.rings) {
            std::vector<Point> pts;
            for (double a : r.angles) {
                pts.push_back({r.center.x + r.radius * ring / 10.0 * std::cos(a),
                               r.center.y + r.radius * ring / 10.0 * std::sin(a)});
            }
            out += "<polygon points=\"" + points_attr(pts) + "\" fill=\"none\" stroke=\"" + escape(pal.border) +
                   "\" stroke-width=\"0.75\" stroke-opacity=\"0.5\"/>\n";
        }
        for (double a : r.angles) {
            out += "<line x1=\"" + num(r.center.x) + "\" y1=\"" + num(r.center.y) + "\" x2=\"" +
                   num(r.center.x + r.radius * std::cos(a)) + "\" y2=\"" + num(r.center.y + r.radius * std::sin(a)) +
                   "\" stroke=\"" + escape(pal.border) + "\" stroke-width=\"1.00\"/>\n";
        }
        out += "<polygon points=\"" + points_attr(r.vertices) + "\" fill=\"" + escape(pal.radar_fill) +
               "\" fill-opacity=\"0.60\" stroke=\"" + escape(pal.radar_stroke) + "\" stroke-width=\"2.00\"/>\n";
    }
    for (const auto& arrow : spec.arrows) {
        out += "<polyline points=\"" + points_attr(arrow.points) + "\" fill=\"none\" stroke=\"" + escape(pal.arrow) +
               "\" stroke-width=\"2.00\" marker-end=\"url(#arrowhead)\"/>\n";
    }
    if (spec.title) emit_text(out, *spec.title, style);
    for (const auto& box : spec.boxes) {
        emit_text(out, box.title, style);
        for (const auto& block : box.body) emit_text(out, block, style);
    }
    out += "</svg>\n";
    return out;
}

std::string render_svg(const frameworks::OrganizedAnalysis& analysis, const Style& style) {
    return emit_svg(layout(analysis, style));
}

Style style_from_json(const nlohmann::json& j) {
    Style s;
    if (!j.is_object()) throw DiagramError(DiagramError::Kind::invalid_style, "style must be a JSON object");
    try {
        if (auto c = j.find("canvas"); c != j.end()) {
            s.canvas_width = c->value("width", s.canvas_width);
            s.canvas_height = c->value("height", s.canvas_height);
        }
        if (auto f = j.find("font"); f != j.end()) {
            s.min_font = f->value("min", s.min_font);
            s.max_font = f->value("max", s.max_font);
            s.body_max_font = f->value("body_max", s.body_max_font);
            s.font_family = f->value("family", s.font_family);
        }
        s.padding = j.value("padding", s.padding);
        if (auto p = j.find("palette"); p != j.end()) {
            auto& pal = s.palette;
            pal.background = p->value("background", pal.background);
            pal.box_fill = p->value("box_fill", pal.box_fill);
            pal.border = p->value("border", pal.border);
            pal.text = p->value("text", pal.text);
            pal.arrow = p->value("arrow", pal.arrow);
            pal.attention = p->value("attention", pal.attention);
            pal.radar_fill = p->value("radar_fill", pal.radar_fill);
            pal.radar_stroke = p->value("radar_stroke", pal.radar_stroke);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DiagramError(DiagramError::Kind::invalid_style, std::string("bad style value: ") + e.what());
    }
    if (s.canvas_width <= 0 || s.canvas_height <= 0) {
        throw DiagramError(DiagramError::Kind::invalid_style, "canvas must have positive size");
    }
    if (s.min_font <= 0 || s.min_font > s.max_font || s.body_max_font < s.min_font) {
        throw DiagramError(DiagramError::Kind::invalid_style, "font bounds must satisfy 0 < min <= body_max, max");
    }
    if (s.padding < 6.0) throw DiagramError(DiagramError::Kind::invalid_style, "padding must be at least 6 px");
    s.body_max_font = std::min(s.body_max_font, s.max_font);
    return s;
}

nlohmann::ordered_json to_json(const Style& s) {
    const auto& p = s.palette;
    return {
        {"canvas", {{"width", s.canvas_width}, {"height", s.canvas_height}}},
        {"font", {{"min", s.min_font}, {"max", s.max_font}, {"body_max", s.body_max_font}, {"family", s.font_family}}},
        {"padding", s.padding},
        {"palette",
         {{"background", p.background},
          {"box_fill", p.box_fill},
          {"border", p.border},
          {"text", p.text},
          {"arrow", p.arrow},
          {"attention", p.attention},
          {"radar_fill", p.radar_fill},
          {"radar_stroke", p.radar_stroke}}},
    };
}

}  // namespace stratagem::diagram
