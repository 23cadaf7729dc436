#include "stratagem/diagram.hpp"

#include "text_util.hpp"

#include <cmath>

namespace stratagem::diagram {

namespace {

// Helvetica advance widths, ' ' (32) through '~' (126). Arial shares them.
constexpr std::array<double, 95> kSans{
    278, 278, 355, 556, 556, 889, 667, 191, 333, 333, 389, 584, 278, 333, 278, 278,  // space .. /
    556, 556, 556, 556, 556, 556, 556, 556, 556, 556,                                // 0 .. 9
    278, 278, 584, 584, 584, 556, 1015,                                              // : .. @
    667, 667, 722, 722, 667, 611, 778, 722, 278, 500, 667, 556, 833,                 // A .. M
    722, 778, 667, 778, 722, 667, 611, 722, 667, 944, 667, 667, 611,                 // N .. Z
    278, 278, 278, 469, 556, 222,                                                    // [ .. `
    556, 556, 500, 556, 556, 278, 556, 556, 222, 222, 500, 222, 833,                 // a .. m
    556, 556, 556, 556, 333, 500, 278, 556, 500, 722, 500, 500, 500,                 // n .. z
    334, 260, 334, 584,                                                              // { .. ~
};

/// Splits UTF-8 into code points (as byte slices); invalid bytes stand alone.
std::vector<std::string_view> code_points(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        std::size_t n = 1;
        if (lead >= 0xF0) n = 4;
        else if (lead >= 0xE0) n = 3;
        else if (lead >= 0xC0) n = 2;
        if (i + n > text.size()) n = 1;
        out.push_back(text.substr(i, n));
        i += n;
    }
    return out;
}

char32_t decode(std::string_view cp) {
    const auto b = [&](std::size_t k) { return static_cast<char32_t>(static_cast<unsigned char>(cp[k])); };
    switch (cp.size()) {
        case 1: return b(0);
        case 2: return ((b(0) & 0x1F) << 6) | (b(1) & 0x3F);
        case 3: return ((b(0) & 0x0F) << 12) | ((b(1) & 0x3F) << 6) | (b(2) & 0x3F);
        default: return ((b(0) & 0x07) << 18) | ((b(1) & 0x3F) << 12) | ((b(2) & 0x3F) << 6) | (b(3) & 0x3F);
    }
}

}  // namespace

FontMetrics::FontMetrics(std::string name, const std::array<double, 95>& ascii, double fallback)
    : name_(std::move(name)), ascii_(ascii), fallback_(fallback) {}

const FontMetrics& FontMetrics::sans() {
    static const FontMetrics metrics("Helvetica", kSans);
    return metrics;
}

double FontMetrics::advance(char32_t c) const {
    if (c >= 32 && c <= 126) return ascii_[c - 32];
    return fallback_;
}

double FontMetrics::measure(std::string_view text, double size) const {
    double units = 0.0;
    for (auto cp : code_points(text)) units += advance(decode(cp));
    return size * units / 1000.0;
}

std::optional<std::vector<std::string>> wrap_text(std::string_view text, double width, double size,
                                                  const FontMetrics& metrics) {
    std::vector<std::string> lines;
    std::string current;
    auto fits = [&](std::string_view s) { return metrics.measure(s, size) <= width + 1e-9; };
    for (const auto& word : detail::split_words(text)) {
        std::string candidate = current.empty() ? word : current + " " + word;
        if (fits(candidate)) {
            current = std::move(candidate);
            continue;
        }
        if (!current.empty()) {
            lines.push_back(current);
            current.clear();
        }
        if (fits(word)) {
            current = word;
            continue;
        }
        // Hyphen-split a token wider than the line.
        std::string chunk;
        for (auto cp : code_points(word)) {
            std::string next = chunk + std::string(cp);
            if (fits(next + "-")) {
                chunk = std::move(next);
                continue;
            }
            if (chunk.empty()) {
                if (!fits(cp)) return std::nullopt;
                lines.emplace_back(cp);
                continue;
            }
            lines.push_back(chunk + "-");
            chunk = std::string(cp);
            if (!fits(chunk)) return std::nullopt;
        }
        current = std::move(chunk);
    }
    if (!current.empty()) lines.push_back(std::move(current));
    return lines;
}

bool fits_at(std::string_view text, double width, double height, double size, const FontMetrics& metrics) {
    const auto lines = wrap_text(text, width, size, metrics);
    if (!lines) return false;
    return static_cast<double>(lines->size()) * kLineHeight * size <= height + 1e-9;
}

FitResult fit_text(std::string_view text, double width, double height, const FontMetrics& metrics, double min_font,
                   double max_font) {
    FitResult result;
    auto& block = result.block;
    block.width = width;
    block.height = height;
    block.min_font = min_font;
    block.max_font = max_font;
    block.source = std::string(text);
    if (detail::trim(text).empty()) {
        block.font_size = max_font;
        return result;
    }
    const int hi = static_cast<int>(std::floor(max_font));
    const int lo = static_cast<int>(std::ceil(min_font));
    // Downward scan: the first size that fits is the largest one.
    for (int size = hi; size >= lo; --size) {
        auto lines = wrap_text(text, width, size, metrics);
        if (lines && static_cast<double>(lines->size()) * kLineHeight * size <= height + 1e-9) {
            block.lines = std::move(*lines);
            block.font_size = size;
            return result;
        }
    }
    const auto at_min = wrap_text(text, width, lo, metrics);
    if (!at_min) {
        result.status = FitResult::Status::unbreakable;
        return result;
    }
    result.status = FitResult::Status::does_not_fit;
    result.required_height = static_cast<double>(at_min->size()) * kLineHeight * lo;
    return result;
}

}  // namespace stratagem::diagram
