#pragma once

#include "swv/core_field.hpp"
#include "swv/shapes.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

namespace swv {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Diverging map; each half blends linearly from neutral, rounded half up per channel.
struct ColorMap {
    Rgb negative{40, 90, 255};
    Rgb neutral{16, 16, 16};
    Rgb positive{255, 70, 40};

    Rgb apply(double v) const;  // v clamped to [-1, 1]; NaN maps to neutral
};

Rgb colormap_apply(double v);

// Rec. 709 luma of the gamma-encoded channels, in [0, 255].
double luma(Rgb c);

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, top row first, 3 bytes per pixel

    Image() = default;
    Image(std::size_t w, std::size_t h, Rgb fill);

    Rgb pixel(std::size_t x, std::size_t y) const;
    void set(std::size_t x, std::size_t y, Rgb c);

    friend bool operator==(const Image&, const Image&) = default;
};

enum class RenderMode { Heatmap, Ridgeline };

std::string_view to_string(RenderMode mode);
std::optional<RenderMode> parse_render_mode(std::string_view name);

struct RenderSettings {
    std::size_t scale = 2;             // pixels per cell, horizontally and in heatmaps
    std::size_t ridge_rows = 0;        // 0 means one line per grid row
    double displacement_gain = 20.0;   // pixels per unit m_z
    double view_deg = 60.0;           // tilt; row pitch is scale * sin(view)
    Rgb background{0, 0, 0};
    ColorMap colormap{};

    void validate(const GridSpec& grid) const;
};

// Heatmap: grid row ny-1 on the top image row; each cell covers scale x scale pixels.
Image render_heatmap(const Frame& frame, const ShapeMask& mask, const RenderSettings& settings);

struct RidgeVertex {
    double x = 0.0;  // screen pixels
    double y = 0.0;  // screen pixels, growing downwards
    double value = 0.0;
    bool inside = false;
};

struct RidgeLine {
    std::size_t grid_row = 0;
    double base_y = 0.0;
    std::vector<RidgeVertex> vertices;  // one per grid column
};

struct RidgeLayout {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<RidgeLine> lines;  // front (lowest grid row) first
};

// Screen geometry of the ridgeline plot: vertex y = base_y - gain * m_z.
RidgeLayout ridgeline_layout(const Frame& frame, const ShapeMask& mask, const RenderSettings& settings);

// Lines painted back to front; the region below each line is filled with the background so
// nearer lines occlude farther ones. Segments are drawn only between adjacent in-mask cells.
Image render_ridgeline(const Frame& frame, const ShapeMask& mask, const RenderSettings& settings);

Image render_frame(const Frame& frame, const ShapeMask& mask, const RenderSettings& settings, RenderMode mode);

struct AnimationInfo {
    std::size_t frame_count = 0;
    double fps = 0.0;  // frames_per_period / 2
    double duration_s() const noexcept { return fps > 0.0 ? static_cast<double>(frame_count) / fps : 0.0; }
};

using FrameSink = std::function<void(std::size_t index, const Image& image)>;

// One image per series frame, delivered in frame order.
AnimationInfo render_animation(const ScalarFieldSeries& series, const ShapeMask& mask, const RenderSettings& settings,
                               RenderMode mode, int frames_per_period, const FrameSink& sink);

struct Animation {
    AnimationInfo info;
    std::vector<Image> images;
};

Animation render_animation(const ScalarFieldSeries& series, const ShapeMask& mask, const RenderSettings& settings,
                           RenderMode mode = RenderMode::Heatmap, int frames_per_period = 20);

}  // namespace swv
