#include "swv/core_field.hpp"

#include "swv/errors.hpp"

#include <algorithm>
#include <string>

namespace swv {

void GridSpec::validate() const {
    if (nx < 2 || ny < 2) {
        throw ParameterError("grid must be at least 2x2 cells, got " + std::to_string(nx) + "x" +
                             std::to_string(ny));
    }
    if (!(dx > 0.0) || !(dy > 0.0) || !(thickness > 0.0)) {
        throw ParameterError("grid cell size and thickness must be positive");
    }
}

Frame::Frame(std::size_t nx, std::size_t ny, std::vector<double> data)
    : nx_(nx), ny_(ny), data_(std::move(data)) {
    if (data_.size() != nx_ * ny_) {
        throw InputError("frame data size " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(nx_) + "x" + std::to_string(ny_));
    }
}

void ScalarFieldSeries::validate() const {
    grid.validate();
    if (frames.empty()) {
        throw InputError("series has no frames");
    }
    if (!(frame_dt > 0.0)) {
        throw InputError("series frame_dt must be positive");
    }
    for (const auto& f : frames) {
        if (f.nx() != grid.nx || f.ny() != grid.ny) {
            throw InputError("series frame dimensions do not match grid");
        }
    }
}

Frame VectorField::mz() const {
    Frame out(grid.nx, grid.ny);
    auto dst = out.values();
    for (std::size_t k = 0; k < m.size(); ++k) {
        dst[k] = m[k].z;
    }
    return out;
}

namespace {

// Splits a coordinate into a base node and fraction; the last node gets fraction 0.
void split(double c, std::size_t n, std::size_t& base, double& frac) {
    const double fl = std::floor(c);
    base = static_cast<std::size_t>(fl);
    frac = c - fl;
    if (base >= n - 1) {
        base = n - 1;
        frac = 0.0;
    }
}

double bilinear_unchecked(const Frame& frame, double x, double y) {
    std::size_t i = 0;
    std::size_t j = 0;
    double fx = 0.0;
    double fy = 0.0;
    split(x, frame.nx(), i, fx);
    split(y, frame.ny(), j, fy);
    const std::size_t i1 = fx > 0.0 ? i + 1 : i;
    const std::size_t j1 = fy > 0.0 ? j + 1 : j;
    const double a = frame.at(i, j) + fx * (frame.at(i1, j) - frame.at(i, j));
    const double b = frame.at(i, j1) + fx * (frame.at(i1, j1) - frame.at(i, j1));
    return a + fy * (b - a);
}

void check_xy(std::size_t nx, std::size_t ny, double x, double y) {
    if (!(x >= 0.0 && x <= static_cast<double>(nx - 1) && y >= 0.0 && y <= static_cast<double>(ny - 1))) {
        throw RangeError("sample coordinate (" + std::to_string(x) + ", " + std::to_string(y) +
                         ") outside grid");
    }
}

}  // namespace

double sample_bilinear(const Frame& frame, double x, double y) {
    if (frame.nx() == 0 || frame.ny() == 0) {
        throw RangeError("cannot sample an empty frame");
    }
    check_xy(frame.nx(), frame.ny(), x, y);
    return bilinear_unchecked(frame, x, y);
}

double sample_trilinear_frames(const ScalarFieldSeries& series, double x, double y, double frame_pos) {
    const std::size_t count = series.frames.size();
    if (count == 0) {
        throw InputError("series has no frames");
    }
    const double last = static_cast<double>(count - 1);
    if (!(frame_pos >= 0.0 && frame_pos <= last)) {
        throw RangeError("sample time outside series (frame " + std::to_string(frame_pos) + " of " +
                         std::to_string(count) + ")");
    }
    check_xy(series.grid.nx, series.grid.ny, x, y);
    std::size_t k = 0;
    double ft = 0.0;
    split(frame_pos, count, k, ft);
    const double v0 = bilinear_unchecked(series.frames[k], x, y);
    if (ft == 0.0) {
        return v0;
    }
    const double v1 = bilinear_unchecked(series.frames[k + 1], x, y);
    return v0 + ft * (v1 - v0);
}

double sample_trilinear(const ScalarFieldSeries& series, double x, double y, double t) {
    if (!(series.frame_dt > 0.0)) {
        throw InputError("series frame_dt must be positive");
    }
    // Snap times within rounding distance of a frame so t = k*frame_dt hits frame k exactly.
    double pos = t / series.frame_dt;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-12 * std::max(1.0, nearest)) {
        pos = nearest;
    }
    return sample_trilinear_frames(series, x, y, pos);
}

NormalizedSeries normalize_series(const ScalarFieldSeries& series) {
    double peak = 0.0;
    for (const auto& f : series.frames) {
        for (double v : f.values()) {
            peak = std::max(peak, std::abs(v));
        }
    }
    NormalizedSeries out{series, 1.0, false};
    if (peak == 0.0) {
        out.degenerate = true;
        return out;
    }
    if (peak == 1.0) {
        return out;
    }
    // Division puts the peak cell on exactly 1, so a second pass is the identity.
    out.scale = 1.0 / peak;
    for (auto& f : out.series.frames) {
        for (double& v : f.values()) {
            v /= peak;
        }
    }
    return out;
}

}  // namespace swv
