#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace swv {

// Uniform 2D cell grid. Cell (i, j) covers [i*dx, (i+1)*dx) x [j*dy, (j+1)*dy).
struct GridSpec {
    std::size_t nx = 500;
    std::size_t ny = 150;
    double dx = 10e-9;
    double dy = 10e-9;
    double thickness = 25e-9;

    std::size_t cells() const noexcept { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const noexcept { return j * nx + i; }
    bool operator==(const GridSpec&) const = default;

    void validate() const;
};

// A 2D scalar array stored row-major: y-index outer, x-index inner.
class Frame {
public:
    Frame() = default;
    Frame(std::size_t nx, std::size_t ny, double fill = 0.0) : nx_(nx), ny_(ny), data_(nx * ny, fill) {}
    Frame(std::size_t nx, std::size_t ny, std::vector<double> data);

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    double at(std::size_t i, std::size_t j) const noexcept { return data_[j * nx_ + i]; }
    double& at(std::size_t i, std::size_t j) noexcept { return data_[j * nx_ + i]; }

    std::span<const double> values() const noexcept { return data_; }
    std::span<double> values() noexcept { return data_; }

    bool operator==(const Frame&) const = default;

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::vector<double> data_;
};

// Time-ordered stack of out-of-plane magnetization frames.
struct ScalarFieldSeries {
    GridSpec grid;
    std::vector<Frame> frames;
    double frame_dt = 1.0;              // simulation seconds between frames
    double frame_rate_playback = 10.0;  // frames per second of playback

    std::size_t frame_count() const noexcept { return frames.size(); }
    void validate() const;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3& operator+=(const Vec3& o) noexcept {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) noexcept {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3& operator*=(double s) noexcept {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
    bool operator==(const Vec3&) const = default;
};

inline Vec3 operator+(Vec3 a, const Vec3& b) noexcept { return a += b; }
inline Vec3 operator-(Vec3 a, const Vec3& b) noexcept { return a -= b; }
inline Vec3 operator*(Vec3 a, double s) noexcept { return a *= s; }
inline Vec3 operator*(double s, Vec3 a) noexcept { return a *= s; }
inline double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) noexcept { return std::sqrt(dot(a, a)); }

// Per-cell 3-vector field. Cells outside the material are exactly zero.
struct VectorField {
    GridSpec grid;
    std::vector<Vec3> m;

    VectorField() = default;
    explicit VectorField(const GridSpec& g) : grid(g), m(g.cells()) {}

    const Vec3& at(std::size_t i, std::size_t j) const noexcept { return m[grid.index(i, j)]; }
    Vec3& at(std::size_t i, std::size_t j) noexcept { return m[grid.index(i, j)]; }

    Frame mz() const;
};

// Bilinear interpolation in cell coordinates; nodes sit at integer coordinates.
double sample_bilinear(const Frame& frame, double x, double y);

// Bilinear in space, linear in time between the two bracketing frames. t in seconds.
double sample_trilinear(const ScalarFieldSeries& series, double x, double y, double t);

// Same as sample_trilinear but with time given as a fractional frame index.
double sample_trilinear_frames(const ScalarFieldSeries& series, double x, double y, double frame_pos);

struct NormalizedSeries {
    ScalarFieldSeries series;
    double scale = 1.0;
    bool degenerate = false;
};

// Scales the series so the largest magnitude is 1.
NormalizedSeries normalize_series(const ScalarFieldSeries& series);

}  // namespace swv
