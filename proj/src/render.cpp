#include "swv/render.hpp"

#include "swv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace swv {

namespace {

std::uint8_t blend_channel(std::uint8_t from, std::uint8_t to, double w) {
    const double c = static_cast<double>(from) + w * (static_cast<double>(to) - static_cast<double>(from));
    return static_cast<std::uint8_t>(std::clamp(std::floor(c + 0.5), 0.0, 255.0));
}

long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

void check_frame(const Frame& frame, const ShapeMask& mask) {
    if (frame.nx() != mask.grid.nx || frame.ny() != mask.grid.ny || mask.inside.size() != mask.grid.cells()) {
        throw InputError("frame is " + std::to_string(frame.nx()) + "x" + std::to_string(frame.ny()) + " but mask is " +
                         std::to_string(mask.grid.nx) + "x" + std::to_string(mask.grid.ny));
    }
}

}  // namespace

Rgb ColorMap::apply(double v) const {
    if (std::isnan(v)) return neutral;
    v = std::clamp(v, -1.0, 1.0);
    const Rgb& end = v < 0.0 ? negative : positive;
    const double w = std::abs(v);
    return {blend_channel(neutral.r, end.r, w), blend_channel(neutral.g, end.g, w), blend_channel(neutral.b, end.b, w)};
}

Rgb colormap_apply(double v) { return ColorMap{}.apply(v); }

double luma(Rgb c) { return 0.2126 * c.r + 0.7152 * c.g + 0.0722 * c.b; }

Image::Image(std::size_t w, std::size_t h, Rgb fill) : width(w), height(h), rgb(w * h * 3) {
    for (std::size_t p = 0; p < w * h; ++p) {
        rgb[3 * p] = fill.r;
        rgb[3 * p + 1] = fill.g;
        rgb[3 * p + 2] = fill.b;
    }
}

Rgb Image::pixel(std::size_t x, std::size_t y) const {
    const std::size_t p = 3 * (y * width + x);
    return {rgb[p], rgb[p + 1], rgb[p + 2]};
}

void Image::set(std::size_t x, std::size_t y, Rgb c) {
    const std::size_t p = 3 * (y * width + x);
    rgb[p] = c.r;
    rgb[p + 1] = c.g;
    rgb[p + 2] = c.b;
}

std::string_view to_string(RenderMode mode) { return mode == RenderMode::Heatmap ? "heatmap" : "ridgeline"; }

std::optional<RenderMode> parse_render_mode(std::string_view name) {
    if (name == "heatmap") return RenderMode::Heatmap;
    if (name == "ridgeline") return RenderMode::Ridgeline;
    return std::nullopt;
}

void RenderSettings::validate(const GridSpec& grid) const {
    if (scale < 1 || scale > 64) throw ParameterError("render scale must lie in [1, 64]");
    if (ridge_rows > grid.ny) throw ParameterError("ridge_rows must not exceed ny");
    if (!(displacement_gain > 0.0) || displacement_gain > 4096.0) {
        throw ParameterError("displacement_gain must lie in (0, 4096]");
    }
    if (!(view_deg > 0.0 && view_deg <= 90.0)) throw ParameterError("view_deg must lie in (0, 90]");
}

Image render_heatmap(const Frame& frame, const ShapeMask& mask, const RenderSettings& settings) {
    check_frame(frame, mask);
    settings.validate(mask.grid);
    const std::size_t nx = mask.grid.nx;
    const std::size_t ny = mask.grid.ny;
    const std::size_t s = settings.scale;
    Image img(nx * s, ny * s, settings.background);
    for (std::size_t j = 0; j < ny; ++j) {
        const std::size_t y0 = (ny - 1 - j) * s;
        for (std::size_t i = 0; i < nx; ++i) {
            if (!mask.at(i, j)) continue;
            const Rgb c = settings.colormap.apply(frame.at(i, j));
            for (std::size_t y = y0; y < y0 + s; ++y)
                for (std::size_t x = i * s; x < (i + 1) * s; ++x) img.set(x, y, c);
        }
    }
    return img;
}

RidgeLayout ridgeline_layout(const Frame& frame, const ShapeMask& mask, const RenderSettings& settings) {
    check_frame(frame, mask);
    settings.validate(mask.grid);
    const std::size_t nx = mask.grid.nx;
    const std::size_t ny = mask.grid.ny;
    const std::size_t rows = settings.ridge_rows == 0 ? ny : settings.ridge_rows;
    const double gain = settings.displacement_gain;
    const double pitch = std::max(1.0, static_cast<double>(settings.scale) * std::sin(settings.view_deg * std::numbers::pi / 180.0));
    const double pad = std::ceil(gain) + 1.0;

    RidgeLayout layout;
    layout.width = (nx - 1) * settings.scale + 1;
    layout.height = static_cast<std::size_t>(2.0 * pad + static_cast<double>(round_half_up(static_cast<double>(rows - 1) * pitch))) + 1;
    layout.lines.reserve(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        RidgeLine line;
        if (rows == ny) {
            line.grid_row = r;
        } else if (rows == 1) {
            line.grid_row = ny / 2;
        } else {
            line.grid_row = static_cast<std::size_t>(round_half_up(static_cast<double>(r) * static_cast<double>(ny - 1) / static_cast<double>(rows - 1)));
        }
        line.base_y = pad + static_cast<double>(round_half_up(static_cast<double>(rows - 1 - r) * pitch));
        line.vertices.resize(nx);
        for (std::size_t i = 0; i < nx; ++i) {
            RidgeVertex& v = line.vertices[i];
            v.inside = mask.at(i, line.grid_row);
            v.value = v.inside ? frame.at(i, line.grid_row) : 0.0;
            const double d = std::isnan(v.value) ? 0.0 : std::clamp(v.value, -1.0, 1.0);
            v.x = static_cast<double>(i * settings.scale);
            v.y = line.base_y - gain * d;
        }
        layout.lines.push_back(std::move(line));
    }
    return layout;
}

namespace {

// Screen columns of one run of adjacent in-mask vertices, each with its line span.
struct Column {
    long x;
    long top;
    long bottom;
    double value;
};

std::vector<Column> trace_run(const std::vector<RidgeVertex>& v, std::size_t first, std::size_t last, std::size_t scale) {
    std::vector<double> ys;
    std::vector<double> vals;
    for (std::size_t i = first; i <= last; ++i) {
        if (i == first) {
            ys.push_back(v[i].y);
            vals.push_back(v[i].value);
            continue;
        }
        for (std::size_t k = 1; k <= scale; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(scale);
            ys.push_back(v[i - 1].y + t * (v[i].y - v[i - 1].y));
            vals.push_back(v[i - 1].value + t * (v[i].value - v[i - 1].value));
        }
    }
    std::vector<Column> cols;
    cols.reserve(ys.size());
    const long x0 = static_cast<long>(v[first].x);
    for (std::size_t k = 0; k < ys.size(); ++k) {
        double lo = ys[k];
        double hi = ys[k];
        if (k > 0) {
            const double mid = 0.5 * (ys[k] + ys[k - 1]);
            lo = std::min(lo, mid);
            hi = std::max(hi, mid);
        }
        if (k + 1 < ys.size()) {
            const double mid = 0.5 * (ys[k] + ys[k + 1]);
            lo = std::min(lo, mid);
            hi = std::max(hi, mid);
        }
        cols.push_back({x0 + static_cast<long>(k), round_half_up(lo), round_half_up(hi), vals[k]});
    }
    return cols;
}

}  // namespace

Image render_ridgeline(const Frame& frame, const ShapeMask& mask, const RenderSettings& settings) {
    const RidgeLayout layout = ridgeline_layout(frame, mask, settings);
    Image img(layout.width, layout.height, settings.background);
    const long h = static_cast<long>(layout.height);
    for (auto line = layout.lines.rbegin(); line != layout.lines.rend(); ++line) {
        const auto& v = line->vertices;
        std::size_t i = 0;
        while (i < v.size()) {
            if (!v[i].inside) {
                ++i;
                continue;
            }
            std::size_t last = i;
            while (last + 1 < v.size() && v[last + 1].inside) ++last;
            for (const Column& c : trace_run(v, i, last, settings.scale)) {
                const Rgb color = settings.colormap.apply(c.value);
                const long top = std::clamp(c.top, 0L, h - 1);
                const long bottom = std::clamp(c.bottom, 0L, h - 1);
                const auto x = static_cast<std::size_t>(c.x);
                for (long y = top; y <= bottom; ++y) img.set(x, static_cast<std::size_t>(y), color);
                for (long y = bottom + 1; y < h; ++y) img.set(x, static_cast<std::size_t>(y), settings.background);
            }
            i = last + 1;
        }
    }
    return img;
}

Image render_frame(const Frame& frame, const ShapeMask& mask, const RenderSettings& settings, RenderMode mode) {
    return mode == RenderMode::Heatmap ? render_heatmap(frame, mask, settings) : render_ridgeline(frame, mask, settings);
}

AnimationInfo render_animation(const ScalarFieldSeries& series, const ShapeMask& mask, const RenderSettings& settings,
                               RenderMode mode, int frames_per_period, const FrameSink& sink) {
    if (frames_per_period < 1) throw ParameterError("frames_per_period must be positive");
    if (series.frames.empty()) throw InputError("cannot animate a series with no frames");
    if (!(series.grid == mask.grid)) throw InputError("series and mask grids differ");
    AnimationInfo info;
    info.frame_count = series.frames.size();
    info.fps = static_cast<double>(frames_per_period) / 2.0;
    for (std::size_t k = 0; k < series.frames.size(); ++k) {
        const Image img = render_frame(series.frames[k], mask, settings, mode);
        if (sink) sink(k, img);
    }
    return info;
}

Animation render_animation(const ScalarFieldSeries& series, const ShapeMask& mask, const RenderSettings& settings,
                           RenderMode mode, int frames_per_period) {
    Animation anim;
    anim.info = render_animation(series, mask, settings, mode, frames_per_period,
                                 [&](std::size_t, const Image& img) { anim.images.push_back(img); });
    return anim;
}

}  // namespace swv
