#include "swv/errors.hpp"
#include "swv/shapes.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

using namespace swv;

namespace {

GridSpec grid_with(std::size_t nx, std::size_t ny, double cell) {
    GridSpec g;
    g.nx = nx;
    g.ny = ny;
    g.dx = cell;
    g.dy = cell;
    return g;
}

// Brute-force oracle: the analytic area of a shape in m^2.
double analytic_area(const ShapeParams& p) {
    constexpr double pi = std::numbers::pi;
    return std::visit(
        [&](const auto& s) -> double {
            using P = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<P, StripParams>) {
                return s.length * s.height;
            } else if constexpr (std::is_same_v<P, EllipseParams>) {
                return pi * s.semi_x * s.semi_y;
            } else if constexpr (std::is_same_v<P, PyramidParams>) {
                return 0.5 * (s.base_height + s.tip_height) * s.length;
            } else if constexpr (std::is_same_v<P, VaseParams>) {
                // The cosine integrates to zero over a full period.
                return 2.0 * s.h0 * s.offset * s.length;
            } else {
                return s.band_height * s.length;
            }
        },
        p);
}

}  // namespace

TEST_CASE("shape names round trip in pedal order") {
    std::size_t idx = 0;
    for (ShapeKind k : kAllShapes) {
        CHECK(parse_shape_kind(to_string(k)) == k);
        CHECK(pedal_index(k) == idx++);
    }
    CHECK_FALSE(parse_shape_kind("circle").has_value());
    CHECK(to_string(kAllShapes.front()) == "vase");
    CHECK(to_string(kAllShapes.back()) == "wave");
}

TEST_CASE("strip covers exactly 450 x 100 cells on the default grid") {
    const auto mask = rasterize_shape(StripParams{}, GridSpec{});
    CHECK(mask.count() == 45000);
    CHECK(mask.kind == ShapeKind::Strip);
}

TEST_CASE("ellipse cell count is within 1% of pi*a*b/cell area") {
    const GridSpec g;
    const auto mask = rasterize_shape(EllipseParams{}, g);
    const double expected = std::numbers::pi * 225.0 * 65.0;
    CHECK(std::abs(static_cast<double>(mask.count()) - expected) / expected < 0.01);
}

TEST_CASE("invalid parameters are rejected") {
    CHECK_THROWS_AS(rasterize_shape(EllipseParams{0.0, 0.65e-6}, GridSpec{}), ParameterError);
    CHECK_THROWS_AS(rasterize_shape(StripParams{-1e-6, 1e-6}, GridSpec{}), ParameterError);
    CHECK_THROWS_AS(rasterize_shape(VaseParams{4.5e-6, 0.65e-6, 0.3, 0.45}, GridSpec{}), ParameterError);
    CHECK_THROWS_AS(rasterize_shape(StripParams{std::nan(""), 1e-6}, GridSpec{}), ParameterError);
}

TEST_CASE("shapes violating the margin or covering no cell are rejected") {
    CHECK_THROWS_AS(rasterize_shape(StripParams{4.99e-6, 1e-6}, GridSpec{}), ParameterError);
    CHECK_THROWS_AS(rasterize_shape(StripParams{4.5e-6, 1.49e-6}, GridSpec{}), ParameterError);
    // Thinner than a cell and centered on a cell boundary: no center is inside.
    CHECK_THROWS_AS(rasterize_shape(StripParams{4.5e-6, 5e-9}, GridSpec{}), ParameterError);
}

TEST_CASE("disconnected rasterization is rejected") {
    // Band much thinner than its vertical excursion per cell breaks into islands.
    WaveParams w;
    w.band_height = 12e-9;
    w.amplitude = 0.5e-6;
    w.wavelength = 0.5e-6;
    CHECK_THROWS_AS(rasterize_shape(w, GridSpec{}), ParameterError);
}

TEST_CASE("presets: five kinds that rasterize to distinct connected masks") {
    const auto presets = shape_presets();
    REQUIRE(presets.size() == 5);
    std::set<std::vector<std::uint8_t>> distinct;
    for (const auto& [kind, params] : presets) {
        CHECK(kind_of(params) == kind);
        const auto mask = rasterize_shape(params, GridSpec{});
        CHECK(mask.count() > 0);
        CHECK(is_four_connected(mask));
        distinct.insert(mask.inside);
    }
    CHECK(distinct.size() == 5);
}

TEST_CASE("symmetric presets rasterize to mirror-symmetric masks") {
    const GridSpec g;
    for (ShapeKind k : {ShapeKind::Strip, ShapeKind::Ellipse, ShapeKind::Vase}) {
        const auto mask = rasterize_shape(default_params(k), g);
        for (std::size_t j = 0; j < g.ny; ++j) {
            for (std::size_t i = 0; i < g.nx; ++i) {
                REQUIRE(mask.at(i, j) == mask.at(g.nx - 1 - i, j));
                REQUIRE(mask.at(i, j) == mask.at(i, g.ny - 1 - j));
            }
        }
    }
    const auto pyr = rasterize_shape(PyramidParams{}, g);
    for (std::size_t j = 0; j < g.ny; ++j) {
        for (std::size_t i = 0; i < g.nx; ++i) {
            REQUIRE(pyr.at(i, j) == pyr.at(i, g.ny - 1 - j));
        }
    }
}

TEST_CASE("pyramid tapers and vase pinches at its waist") {
    const GridSpec g;
    auto column_height = [&](const ShapeMask& m, std::size_t i) {
        std::size_t n = 0;
        for (std::size_t j = 0; j < g.ny; ++j) n += m.at(i, j) ? 1 : 0;
        return n;
    };
    const auto pyr = rasterize_shape(PyramidParams{}, g);
    std::size_t prev = g.ny;
    for (std::size_t i = 26; i < 474; ++i) {
        const std::size_t h = column_height(pyr, i);
        CHECK(h <= prev);
        prev = h;
    }
    const auto vase = rasterize_shape(VaseParams{}, g);
    CHECK(column_height(vase, 250) < column_height(vase, 30));
    CHECK(column_height(vase, 250) == 14);  // half height just above 6.5 cells at this column
}

TEST_CASE("area fraction converges with resolution") {
    for (ShapeKind k : kAllShapes) {
        const auto params = default_params(k);
        const auto coarse = rasterize_shape(params, grid_with(500, 150, 10e-9));
        const auto fine = rasterize_shape(params, grid_with(1000, 300, 5e-9));
        const double fc = static_cast<double>(coarse.count()) / static_cast<double>(coarse.grid.cells());
        const double ff = static_cast<double>(fine.count()) / static_cast<double>(fine.grid.cells());
        CHECK_MESSAGE(std::abs(fc - ff) / ff < 0.01, to_string(k));
        const double cell = 5e-9 * 5e-9;
        const double analytic = analytic_area(params) / cell;
        CHECK_MESSAGE(std::abs(static_cast<double>(fine.count()) - analytic) / analytic < 0.01, to_string(k));
    }
}

TEST_CASE("property: random strips and ellipses are connected with the expected count") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> len(0.5e-6, 4.6e-6);
    std::uniform_real_distribution<double> hgt(0.1e-6, 1.3e-6);
    const GridSpec g;
    for (int trial = 0; trial < 25; ++trial) {
        const StripParams s{len(rng), hgt(rng)};
        const auto mask = rasterize_shape(s, g);
        CHECK(is_four_connected(mask));
        // Count of centers strictly inside |u| < L/2 per axis, computed independently.
        auto centers = [](double extent, std::size_t n, double cell) {
            std::size_t c = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double u = (static_cast<double>(i) + 0.5 - 0.5 * static_cast<double>(n)) * cell;
                if (std::abs(u) < extent / 2) ++c;
            }
            return c;
        };
        CHECK(mask.count() == centers(s.length, g.nx, g.dx) * centers(s.height, g.ny, g.dy));

        const EllipseParams e{0.5 * len(rng), 0.5 * hgt(rng)};
        const auto em = rasterize_shape(e, g);
        CHECK(is_four_connected(em));
        const double expected = std::numbers::pi * e.semi_x * e.semi_y / (g.dx * g.dy);
        // Boundary cells bound the discrepancy by the perimeter in cells.
        const double perimeter_cells = 2.0 * std::numbers::pi * std::max(e.semi_x, e.semi_y) / g.dx;
        CHECK(std::abs(static_cast<double>(em.count()) - expected) <= perimeter_cells);
    }
}

TEST_CASE("mask_from_series marks cells nonzero in any frame") {
    ScalarFieldSeries s;
    s.grid = grid_with(3, 2, 10e-9);
    s.frames = {Frame(3, 2, {0, 0.5, 0, 0, 0, 0}), Frame(3, 2, {0, 0, 0, 0, -0.1, 0})};
    const auto m = mask_from_series(s, ShapeKind::Wave);
    CHECK(m.count() == 2);
    CHECK(m.at(1, 0));
    CHECK(m.at(1, 1));
    CHECK(m.kind == ShapeKind::Wave);
}
