#pragma once

#include "swv/core_field.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace swv {

enum class ShapeKind { Vase, Ellipse, Pyramid, Strip, Wave };

// Left-to-right pedal order.
inline constexpr std::array<ShapeKind, 5> kAllShapes = {ShapeKind::Vase, ShapeKind::Ellipse, ShapeKind::Pyramid,
                                                        ShapeKind::Strip, ShapeKind::Wave};

std::string_view to_string(ShapeKind kind);
std::optional<ShapeKind> parse_shape_kind(std::string_view name);
std::size_t pedal_index(ShapeKind kind);

// All lengths in meters, centered on the grid.
struct StripParams {
    double length = 4.5e-6;
    double height = 1.0e-6;
};

struct EllipseParams {
    double semi_x = 2.25e-6;
    double semi_y = 0.65e-6;
};

// Isosceles trapezoid tapering from base_height at the left end to tip_height at the right.
struct PyramidParams {
    double length = 4.5e-6;
    double base_height = 1.3e-6;
    double tip_height = 0.2e-6;
};

// Half-height h(x) = h0 * (offset + depth * cos(2*pi*x/length)), x from the left end.
struct VaseParams {
    double length = 4.5e-6;
    double h0 = 0.65e-6;
    double offset = 0.55;
    double depth = 0.45;
};

// Band of constant height whose centerline is amplitude * sin(2*pi*x/wavelength).
struct WaveParams {
    double length = 4.5e-6;
    double band_height = 0.6e-6;
    double amplitude = 0.3e-6;
    double wavelength = 2.25e-6;
};

using ShapeParams = std::variant<VaseParams, EllipseParams, PyramidParams, StripParams, WaveParams>;

ShapeKind kind_of(const ShapeParams& params);
ShapeParams default_params(ShapeKind kind);

struct ShapeMask {
    GridSpec grid;
    std::vector<std::uint8_t> inside;  // row-major like Frame
    ShapeKind kind = ShapeKind::Strip;
    ShapeParams params;

    bool at(std::size_t i, std::size_t j) const noexcept { return inside[grid.index(i, j)] != 0; }
    std::size_t count() const noexcept;
};

inline constexpr std::size_t kShapeMargin = 2;

// Cell is inside iff its center satisfies the shape inequality. Throws ParameterError
// for empty shapes, shapes violating the grid margin, or disconnected masks.
ShapeMask rasterize_shape(const ShapeParams& params, const GridSpec& grid);

std::map<ShapeKind, ShapeParams> shape_presets();

bool is_four_connected(const ShapeMask& mask);

// Mask from data: a cell is material if it is nonzero in any frame.
ShapeMask mask_from_series(const ScalarFieldSeries& series, ShapeKind kind = ShapeKind::Strip);

}  // namespace swv
