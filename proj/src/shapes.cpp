#include "swv/shapes.hpp"

#include "swv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace swv {

std::string_view to_string(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Vase: return "vase";
        case ShapeKind::Ellipse: return "ellipse";
        case ShapeKind::Pyramid: return "pyramid";
        case ShapeKind::Strip: return "strip";
        case ShapeKind::Wave: return "wave";
    }
    return "unknown";
}

std::optional<ShapeKind> parse_shape_kind(std::string_view name) {
    for (ShapeKind k : kAllShapes) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

std::size_t pedal_index(ShapeKind kind) {
    return static_cast<std::size_t>(std::find(kAllShapes.begin(), kAllShapes.end(), kind) - kAllShapes.begin());
}

ShapeKind kind_of(const ShapeParams& params) {
    struct Visitor {
        ShapeKind operator()(const VaseParams&) const { return ShapeKind::Vase; }
        ShapeKind operator()(const EllipseParams&) const { return ShapeKind::Ellipse; }
        ShapeKind operator()(const PyramidParams&) const { return ShapeKind::Pyramid; }
        ShapeKind operator()(const StripParams&) const { return ShapeKind::Strip; }
        ShapeKind operator()(const WaveParams&) const { return ShapeKind::Wave; }
    };
    return std::visit(Visitor{}, params);
}

ShapeParams default_params(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Vase: return VaseParams{};
        case ShapeKind::Ellipse: return EllipseParams{};
        case ShapeKind::Pyramid: return PyramidParams{};
        case ShapeKind::Strip: return StripParams{};
        case ShapeKind::Wave: return WaveParams{};
    }
    return StripParams{};
}

std::size_t ShapeMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
}

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParameterError(std::string("shape parameter ") + name + " must be positive");
    }
}

// Membership test in shape-local coordinates: u along x from the shape center, v along y.
struct Membership {
    const ShapeParams& params;

    bool operator()(double u, double v) const {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        return std::visit(
            [&](const auto& p) -> bool {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, StripParams>) {
                    return std::abs(u) < p.length / 2 && std::abs(v) < p.height / 2;
                } else if constexpr (std::is_same_v<P, EllipseParams>) {
                    const double a = u / p.semi_x;
                    const double b = v / p.semi_y;
                    return a * a + b * b < 1.0;
                } else if constexpr (std::is_same_v<P, PyramidParams>) {
                    if (std::abs(u) >= p.length / 2) return false;
                    const double s = (u + p.length / 2) / p.length;
                    const double half = 0.5 * (p.base_height + (p.tip_height - p.base_height) * s);
                    return std::abs(v) < half;
                } else if constexpr (std::is_same_v<P, VaseParams>) {
                    if (std::abs(u) >= p.length / 2) return false;
                    const double x = u + p.length / 2;
                    const double half = p.h0 * (p.offset + p.depth * std::cos(two_pi * x / p.length));
                    return std::abs(v) < half;
                } else {
                    if (std::abs(u) >= p.length / 2) return false;
                    const double x = u + p.length / 2;
                    const double yc = p.amplitude * std::sin(two_pi * x / p.wavelength);
                    return std::abs(v - yc) < p.band_height / 2;
                }
            },
            params);
    }
};

void validate_params(const ShapeParams& params) {
    std::visit(
        [](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, StripParams>) {
                require_positive(p.length, "length");
                require_positive(p.height, "height");
            } else if constexpr (std::is_same_v<P, EllipseParams>) {
                require_positive(p.semi_x, "semi_x");
                require_positive(p.semi_y, "semi_y");
            } else if constexpr (std::is_same_v<P, PyramidParams>) {
                require_positive(p.length, "length");
                require_positive(p.base_height, "base_height");
                require_positive(p.tip_height, "tip_height");
            } else if constexpr (std::is_same_v<P, VaseParams>) {
                require_positive(p.length, "length");
                require_positive(p.h0, "h0");
                require_positive(p.offset - std::abs(p.depth), "offset - |depth|");
            } else {
                require_positive(p.length, "length");
                require_positive(p.band_height, "band_height");
                require_positive(p.wavelength, "wavelength");
                if (!(p.amplitude >= 0.0)) throw ParameterError("shape parameter amplitude must be non-negative");
            }
        },
        params);
}

}  // namespace

bool is_four_connected(const ShapeMask& mask) {
    const auto& g = mask.grid;
    const std::size_t total = mask.count();
    if (total == 0) {
        return false;
    }
    std::vector<std::uint8_t> seen(g.cells(), 0);
    std::vector<std::size_t> stack;
    const auto first = static_cast<std::size_t>(std::find(mask.inside.begin(), mask.inside.end(), 1) -
                                                mask.inside.begin());
    stack.push_back(first);
    seen[first] = 1;
    std::size_t reached = 0;
    while (!stack.empty()) {
        const std::size_t k = stack.back();
        stack.pop_back();
        ++reached;
        const std::size_t i = k % g.nx;
        const std::size_t j = k / g.nx;
        auto visit = [&](std::size_t ii, std::size_t jj) {
            const std::size_t n = g.index(ii, jj);
            if (mask.inside[n] && !seen[n]) {
                seen[n] = 1;
                stack.push_back(n);
            }
        };
        if (i > 0) visit(i - 1, j);
        if (i + 1 < g.nx) visit(i + 1, j);
        if (j > 0) visit(i, j - 1);
        if (j + 1 < g.ny) visit(i, j + 1);
    }
    return reached == total;
}

ShapeMask rasterize_shape(const ShapeParams& params, const GridSpec& grid) {
    grid.validate();
    validate_params(params);

    ShapeMask mask{grid, std::vector<std::uint8_t>(grid.cells(), 0), kind_of(params), params};
    // Offsets are formed in cell units first so mirrored cells get bitwise-opposite coordinates.
    const double half_nx = 0.5 * static_cast<double>(grid.nx);
    const double half_ny = 0.5 * static_cast<double>(grid.ny);
    const Membership inside{params};
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double v = (static_cast<double>(j) + 0.5 - half_ny) * grid.dy;
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double u = (static_cast<double>(i) + 0.5 - half_nx) * grid.dx;
            if (inside(u, v)) {
                if (i < kShapeMargin || j < kShapeMargin || i + kShapeMargin >= grid.nx ||
                    j + kShapeMargin >= grid.ny) {
                    throw ParameterError("shape " + std::string(to_string(mask.kind)) + " does not fit the " +
                                         std::to_string(grid.nx) + "x" + std::to_string(grid.ny) +
                                         " grid with a 2-cell margin");
                }
                mask.inside[grid.index(i, j)] = 1;
            }
        }
    }
    if (mask.count() == 0) {
        throw ParameterError("shape " + std::string(to_string(mask.kind)) + " covers no cell centers");
    }
    if (!is_four_connected(mask)) {
        throw ParameterError("shape " + std::string(to_string(mask.kind)) + " rasterizes to a disconnected mask");
    }
    return mask;
}

std::map<ShapeKind, ShapeParams> shape_presets() {
    std::map<ShapeKind, ShapeParams> out;
    for (ShapeKind k : kAllShapes) {
        out.emplace(k, default_params(k));
    }
    return out;
}

ShapeMask mask_from_series(const ScalarFieldSeries& series, ShapeKind kind) {
    const auto& g = series.grid;
    ShapeMask mask{g, std::vector<std::uint8_t>(g.cells(), 0), kind, default_params(kind)};
    for (const auto& f : series.frames) {
        const auto vals = f.values();
        for (std::size_t k = 0; k < vals.size(); ++k) {
            if (vals[k] != 0.0) {
                mask.inside[k] = 1;
            }
        }
    }
    return mask;
}

}  // namespace swv
