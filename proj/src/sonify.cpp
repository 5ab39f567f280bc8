#include "swv/sonify.hpp"

#include "swv/errors.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <string>

namespace swv {

std::string_view to_string(PathKind kind) {
    switch (kind) {
        case PathKind::ScanlinePingpong: return "scanline-pingpong";
        case PathKind::Racetrack: return "racetrack";
        case PathKind::Custom: return "custom";
    }
    return "unknown";
}

std::optional<PathKind> parse_path_kind(std::string_view name) {
    for (PathKind k : {PathKind::ScanlinePingpong, PathKind::Racetrack, PathKind::Custom}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

SamplingPath::SamplingPath(std::vector<Point2> waypoints, PathKind kind) : waypoints_(std::move(waypoints)), kind_(kind) {
    if (waypoints_.size() < 2) {
        throw PathError("a sampling path needs at least 2 waypoints");
    }
    cumulative_.reserve(waypoints_.size() + 1);
    cumulative_.push_back(0.0);
    for (std::size_t k = 0; k < waypoints_.size(); ++k) {
        const Point2& a = waypoints_[k];
        const Point2& b = waypoints_[(k + 1) % waypoints_.size()];
        if (!std::isfinite(a.x) || !std::isfinite(a.y)) {
            throw PathError("sampling path waypoint is not finite");
        }
        cumulative_.push_back(cumulative_.back() + std::hypot(b.x - a.x, b.y - a.y));
    }
    length_ = cumulative_.back();
    if (!(length_ > 0.0)) {
        throw PathError("sampling path has zero length");
    }
}

Point2 SamplingPath::position(double phase) const {
    double p = phase - std::floor(phase);
    if (p >= 1.0) p = 0.0;
    const double s = p * length_;
    // Last cumulative entry not above s.
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t seg = static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    seg = std::min(seg, waypoints_.size() - 1);
    const double seg_len = cumulative_[seg + 1] - cumulative_[seg];
    const double w = seg_len > 0.0 ? (s - cumulative_[seg]) / seg_len : 0.0;
    const Point2& a = waypoints_[seg];
    const Point2& b = waypoints_[(seg + 1) % waypoints_.size()];
    return {a.x + w * (b.x - a.x), a.y + w * (b.y - a.y)};
}

bool mask_contains(const ShapeMask& mask, Point2 p) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    const double i = std::round(p.x);
    const double j = std::round(p.y);
    if (i < 0.0 || j < 0.0 || i > static_cast<double>(mask.grid.nx - 1) || j > static_cast<double>(mask.grid.ny - 1)) {
        return false;
    }
    return mask.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

namespace {

struct Run {
    std::size_t lo = 0;
    std::size_t hi = 0;  // inclusive
    std::size_t size() const { return hi - lo + 1; }
};

// Longest run of consecutive true values; earliest wins ties.
template <typename At>
std::optional<Run> longest_run(std::size_t n, At at) {
    std::optional<Run> best;
    std::size_t k = 0;
    while (k < n) {
        if (!at(k)) {
            ++k;
            continue;
        }
        Run r{k, k};
        while (r.hi + 1 < n && at(r.hi + 1)) ++r.hi;
        if (!best || r.size() > best->size()) best = r;
        k = r.hi + 1;
    }
    return best;
}

std::vector<Point2> resample_closed(const std::vector<Point2>& dense, std::size_t n) {
    const SamplingPath loop(dense, PathKind::Custom);
    std::vector<Point2> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.push_back(loop.position(static_cast<double>(k) / static_cast<double>(n)));
    }
    return out;
}

void check_inside(const ShapeMask& mask, const std::vector<Point2>& pts, std::string_view what) {
    for (const Point2& p : pts) {
        if (!mask_contains(mask, p)) {
            throw PathError(std::string(what) + " waypoint (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                            ") lies outside the mask");
        }
    }
}

SamplingPath build_pingpong(const ShapeMask& mask, std::size_t n) {
    const auto& g = mask.grid;
    const double center = 0.5 * static_cast<double>(g.ny - 1);
    std::optional<Run> best;
    std::size_t best_row = 0;
    for (std::size_t j = 0; j < g.ny; ++j) {
        const auto r = longest_run(g.nx, [&](std::size_t i) { return mask.at(i, j); });
        if (!r) continue;
        const bool better = !best || r->size() > best->size() ||
                            (r->size() == best->size() &&
                             std::abs(static_cast<double>(j) - center) < std::abs(static_cast<double>(best_row) - center));
        if (better) {
            best = r;
            best_row = j;
        }
    }
    if (!best || best->size() < 2) {
        throw PathError("mask is too thin for a scanline path (needs a row of at least 2 cells)");
    }
    // Even count puts a waypoint exactly on the turning point at phase 0.5.
    if (n % 2 == 1) ++n;
    const double x0 = static_cast<double>(best->lo);
    const double width = static_cast<double>(best->hi - best->lo);
    const double y = static_cast<double>(best_row);
    std::vector<Point2> pts;
    pts.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = 2.0 * width * static_cast<double>(k) / static_cast<double>(n);
        pts.push_back({s <= width ? x0 + s : x0 + 2.0 * width - s, y});
    }
    check_inside(mask, pts, "scanline");
    return SamplingPath(std::move(pts), PathKind::ScanlinePingpong);
}

SamplingPath build_racetrack(const ShapeMask& mask, std::size_t n) {
    const auto& g = mask.grid;
    std::optional<std::size_t> first;
    std::size_t last = 0;
    for (std::size_t i = 0; i < g.nx; ++i) {
        for (std::size_t j = 0; j < g.ny; ++j) {
            if (mask.at(i, j)) {
                if (!first) first = i;
                last = i;
                break;
            }
        }
    }
    if (!first) {
        throw PathError("mask is empty");
    }
    const double width = static_cast<double>(last - *first);
    const auto i_begin = static_cast<std::size_t>(std::ceil(static_cast<double>(*first) + 0.1 * width));
    const auto i_end = static_cast<std::size_t>(std::floor(static_cast<double>(last) - 0.1 * width));
    if (i_end <= i_begin) {
        throw PathError("mask is too narrow for a racetrack path");
    }
    std::vector<Point2> top;
    std::vector<Point2> bottom;
    for (std::size_t i = i_begin; i <= i_end; ++i) {
        const auto r = longest_run(g.ny, [&](std::size_t j) { return mask.at(i, j); });
        if (!r) {
            throw PathError("racetrack crosses an empty column " + std::to_string(i));
        }
        const double h = static_cast<double>(r->hi - r->lo);
        const double lo = static_cast<double>(r->lo) + 0.1 * h;
        const double hi = static_cast<double>(r->hi) - 0.1 * h;
        if (!(hi > lo)) {
            throw PathError("mask is too thin for a racetrack path at column " + std::to_string(i));
        }
        top.push_back({static_cast<double>(i), hi});
        bottom.push_back({static_cast<double>(i), lo});
    }
    std::vector<Point2> dense = top;
    dense.insert(dense.end(), bottom.rbegin(), bottom.rend());
    auto pts = resample_closed(dense, n);
    check_inside(mask, pts, "racetrack");
    return SamplingPath(std::move(pts), PathKind::Racetrack);
}

}  // namespace

SamplingPath build_path(const ShapeMask& mask, PathKind kind, std::size_t n_waypoints) {
    if (n_waypoints < 2) {
        throw PathError("n_waypoints must be at least 2");
    }
    if (mask.count() == 0) {
        throw PathError("mask is empty");
    }
    switch (kind) {
        case PathKind::ScanlinePingpong: return build_pingpong(mask, n_waypoints);
        case PathKind::Racetrack: return build_racetrack(mask, n_waypoints);
        case PathKind::Custom: break;
    }
    throw PathError("custom paths are built from explicit waypoints");
}

SamplingPath custom_path(const ShapeMask& mask, std::vector<Point2> waypoints) {
    check_inside(mask, waypoints, "custom");
    return SamplingPath(std::move(waypoints), PathKind::Custom);
}

void SonifyConfig::validate() const {
    if (fs <= 0) throw ParameterError("fs must be positive");
    if (!(f0 > 0.0) || !(f0 < 0.5 * fs)) throw ParameterError("f0 must lie in (0, fs/2)");
    if (!(fps > 0.0) || !std::isfinite(fps)) throw ParameterError("fps must be positive");
    if (!std::isfinite(gain)) throw ParameterError("gain must be finite");
    if (frames_per_period < 2) throw ParameterError("frames_per_period must be at least 2");
}

void AudioClip::validate() const {
    if (fs <= 0) throw InputError("audio sample rate must be positive");
    if (channels != 1 && channels != 2) throw InputError("audio clips are mono or stereo");
    if (samples.size() % static_cast<std::size_t>(channels) != 0) throw InputError("interleaved sample count mismatch");
    for (double v : samples) {
        if (!std::isfinite(v) || std::abs(v) > 1.0) throw InputError("audio sample outside [-1, 1]");
    }
}

std::size_t period_samples(const SonifyConfig& cfg) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(cfg.fs) / cfg.f0));
}

namespace {

std::size_t clip_length(std::size_t frame_count, const SonifyConfig& cfg) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(cfg.fs) * static_cast<double>(frame_count) / cfg.fps));
}

}  // namespace

AudioClip scan_synthesize(const ScalarFieldSeries& series, const SamplingPath& path, const SonifyConfig& cfg) {
    cfg.validate();
    if (series.frames.empty()) {
        throw InputError("cannot synthesize from a series with no frames");
    }
    const double max_x = static_cast<double>(series.grid.nx - 1);
    const double max_y = static_cast<double>(series.grid.ny - 1);
    for (const Point2& p : path.waypoints()) {
        if (p.x < 0.0 || p.y < 0.0 || p.x > max_x || p.y > max_y) {
            throw PathError("sampling path leaves the series grid");
        }
    }
    AudioClip clip;
    clip.fs = cfg.fs;
    clip.channels = 1;
    const std::size_t n = clip_length(series.frames.size(), cfg);
    clip.samples.resize(n);
    const double last = static_cast<double>(series.frames.size() - 1);
    const double fs = static_cast<double>(cfg.fs);
    for (std::size_t k = 0; k < n; ++k) {
        const double kd = static_cast<double>(k);
        const double phase = std::fmod(cfg.f0 * kd, fs) / fs;
        const double frame_pos = std::min(kd * cfg.fps / fs, last);
        const Point2 p = path.position(phase);
        const double v = cfg.gain * sample_trilinear_frames(series, p.x, p.y, frame_pos);
        clip.samples[k] = std::clamp(v, -1.0, 1.0);
    }
    return clip;
}

std::vector<double> period_rms(const ScalarFieldSeries& series, int frames_per_period, const ShapeMask* mask) {
    if (frames_per_period < 1) throw ParameterError("frames_per_period must be positive");
    const std::size_t cells = series.grid.cells();
    std::vector<std::uint8_t> inside(cells, 0);
    if (mask) {
        if (mask->inside.size() != cells) throw InputError("mask does not match the series grid");
        inside = mask->inside;
    } else {
        for (const auto& f : series.frames) {
            const auto v = f.values();
            for (std::size_t c = 0; c < cells; ++c)
                if (v[c] != 0.0) inside[c] = 1;
        }
    }
    const std::size_t count = static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
    const std::size_t fpp = static_cast<std::size_t>(frames_per_period);
    const std::size_t periods = series.frames.size() / fpp;
    std::vector<double> out(periods, 0.0);
    if (count == 0) return out;
    for (std::size_t p = 0; p < periods; ++p) {
        double acc = 0.0;
        for (std::size_t f = p * fpp; f < (p + 1) * fpp; ++f) {
            const auto v = series.frames[f].values();
            for (std::size_t c = 0; c < cells; ++c)
                if (inside[c]) acc += v[c] * v[c];
        }
        out[p] = std::sqrt(acc / static_cast<double>(count * fpp));
    }
    return out;
}

long steady_onset(std::span<const double> rms, double threshold, int run) {
    auto change = [&](std::size_t q) {
        const double prev = rms[q - 1];
        if (prev == 0.0) return rms[q] == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        return std::abs(rms[q] - prev) / prev;
    };
    const std::size_t r = static_cast<std::size_t>(std::max(run, 1));
    for (std::size_t p = 1; p + r <= rms.size(); ++p) {
        bool steady = true;
        for (std::size_t q = p; q < p + r && steady; ++q) steady = change(q) < threshold;
        if (steady) return static_cast<long>(p);
    }
    return -1;
}

double loop_seam_error(std::span<const double> clip, const LoopSpec& loop, std::size_t period) {
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < period && loop.loop_end + k < clip.size(); ++k, ++used) {
        acc += std::abs(clip[loop.loop_end + k] - clip[loop.loop_start + k]);
    }
    return used > 0 ? acc / static_cast<double>(used) : std::numeric_limits<double>::infinity();
}

LoopSpec detect_loop_points(const ScalarFieldSeries& series, const SonifyConfig& cfg, std::span<const double> clip,
                            const ShapeMask* mask) {
    cfg.validate();
    const std::size_t fpp = static_cast<std::size_t>(cfg.frames_per_period);
    if (series.frames.size() < 5 * fpp) {
        throw InputError("loop detection needs at least 5 excitation periods of frames");
    }
    const std::size_t len = clip_length(series.frames.size(), cfg);
    if (!clip.empty() && clip.size() != len) {
        throw InputError("clip length does not match the series");
    }
    const std::size_t period = period_samples(cfg);
    const auto rms = period_rms(series, cfg.frames_per_period, mask);
    const long onset = steady_onset(rms);

    LoopSpec loop;
    const std::size_t last_index = len - 1;
    if (onset > 0) {
        const double frame = static_cast<double>(onset) * static_cast<double>(fpp);
        loop.transient_end = static_cast<std::size_t>(std::llround(frame * cfg.fs / cfg.fps));
    }
    const std::size_t avail = onset > 0 && loop.transient_end < last_index ? last_index - loop.transient_end : 0;
    std::size_t m_max = avail / period;
    if (onset <= 0 || m_max == 0) {
        loop.fallback = true;
        m_max = (len / 4) / period;
        if (m_max == 0) m_max = last_index / period;
        if (m_max == 0) throw InputError("clip is shorter than one f0 period");
        loop.loop_end = last_index;
        loop.loop_start = loop.loop_end - m_max * period;
        loop.transient_end = loop.loop_start;
        return loop;
    }
    loop.loop_start = loop.transient_end;
    // Without a clip: longest loop within half an f0 period of a whole number of drive periods.
    const double drive = static_cast<double>(fpp) * static_cast<double>(cfg.fs) / cfg.fps;
    std::size_t m = m_max;
    for (std::size_t c = m_max; c >= 1; --c) {
        const double x = static_cast<double>(c * period);
        const double q = std::round(x / drive);
        if (q >= 1.0 && std::abs(x - q * drive) <= 0.5 * static_cast<double>(period)) {
            m = c;
            break;
        }
    }
    if (!clip.empty()) {
        // With a clip: the seam must match both the path phase (period is rounded) and the
        // drive phase. Candidates span at least one drive period; the longest whose seam error
        // is within twice the best (or an absolute 0.01) wins.
        const auto min_c = std::min(m_max, static_cast<std::size_t>(std::ceil(drive / static_cast<double>(period))));
        std::vector<double> err(m_max + 1, std::numeric_limits<double>::infinity());
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = min_c; c <= m_max; ++c) {
            LoopSpec trial = loop;
            trial.loop_end = loop.loop_start + c * period;
            err[c] = loop_seam_error(clip, trial, period);
            best = std::min(best, err[c]);
        }
        // A candidate also needs matching samples at the seam itself; if none qualifies the
        // cleanest seam wins.
        constexpr double kSeamStep = 0.05;
        const double accept = std::max(2.0 * best, 0.01);
        std::size_t chosen = 0;
        std::size_t cleanest = min_c;
        for (std::size_t c = m_max; c >= min_c; --c) {
            const std::size_t end = loop.loop_start + c * period;
            if (chosen == 0 && err[c] <= accept && std::abs(clip[end] - clip[loop.loop_start]) < kSeamStep) chosen = c;
            if (err[c] < err[cleanest]) cleanest = c;
        }
        m = chosen > 0 ? chosen : cleanest;
    }
    loop.loop_end = loop.loop_start + m * period;
    return loop;
}

AudioClip pan(const AudioClip& mono, double position) {
    if (mono.channels != 1) throw InputError("pan expects a mono clip");
    if (!(position >= 0.0 && position <= 1.0)) throw ParameterError("pan position must lie in [0, 1]");
    const double angle = position * std::numbers::pi / 2.0;
    // Exact endpoints so hard left/right leave the other channel silent.
    const double gl = position == 1.0 ? 0.0 : std::cos(angle);
    const double gr = position == 0.0 ? 0.0 : std::sin(angle);
    AudioClip out;
    out.fs = mono.fs;
    out.channels = 2;
    out.samples.resize(2 * mono.samples.size());
    for (std::size_t k = 0; k < mono.samples.size(); ++k) {
        out.samples[2 * k] = gl * mono.samples[k];
        out.samples[2 * k + 1] = gr * mono.samples[k];
    }
    return out;
}

AudioClip mix(const std::vector<AudioClip>& clips, const std::vector<std::size_t>& offsets) {
    if (clips.empty()) throw InputError("mix needs at least one clip");
    if (offsets.size() != clips.size()) throw InputError("mix needs one offset per clip");
    AudioClip out;
    out.fs = clips.front().fs;
    out.channels = clips.front().channels;
    std::size_t frames = 0;
    for (std::size_t c = 0; c < clips.size(); ++c) {
        if (clips[c].fs != out.fs) throw InputError("mix: sample rate mismatch");
        if (clips[c].channels != out.channels) throw InputError("mix: channel count mismatch");
        frames = std::max(frames, offsets[c] + clips[c].frames());
    }
    const std::size_t ch = static_cast<std::size_t>(out.channels);
    out.samples.assign(frames * ch, 0.0);
    for (std::size_t c = 0; c < clips.size(); ++c) {
        const std::size_t base = offsets[c] * ch;
        for (std::size_t k = 0; k < clips[c].samples.size(); ++k) out.samples[base + k] += clips[c].samples[k];
    }
    double peak = 0.0;
    for (double v : out.samples) peak = std::max(peak, std::abs(v));
    if (peak > 1.0) {
        const double s = 1.0 / peak;
        for (double& v : out.samples) v *= s;
    }
    return out;
}

std::array<double, 5> pentatonic_defaults() { return {98.0, 110.0, 123.0, 165.0, 185.0}; }

std::array<double, 5> pan_positions() { return {0.0, 0.25, 0.5, 0.75, 1.0}; }

double default_fundamental(ShapeKind kind) { return pentatonic_defaults()[pedal_index(kind)]; }

double default_pan(ShapeKind kind) { return pan_positions()[pedal_index(kind)]; }

AudioClip render_trigger(const AudioClip& clip, const LoopSpec& loop, double duration_s) {
    if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) throw ParameterError("duration must be non-negative");
    const std::size_t frames = clip.frames();
    if (loop.loop_start >= loop.loop_end || loop.loop_end > frames || loop.transient_end > loop.loop_start) {
        throw InputError("loop points are outside the clip");
    }
    const auto n = static_cast<std::size_t>(std::llround(duration_s * clip.fs));
    const std::size_t ch = static_cast<std::size_t>(clip.channels);
    const std::size_t len = loop.length();
    AudioClip out;
    out.fs = clip.fs;
    out.channels = clip.channels;
    out.samples.resize(n * ch);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t src = k < loop.loop_start ? k : loop.loop_start + (k - loop.loop_start) % len;
        for (std::size_t c = 0; c < ch; ++c) out.samples[k * ch + c] = clip.samples[src * ch + c];
    }
    return out;
}

double dominant_frequency(std::span<const double> samples, int fs, std::size_t start, std::size_t length,
                          double min_hz) {
    if (length < 2 || start + length > samples.size()) throw InputError("analysis window outside the signal");
    std::vector<double> in(samples.begin() + static_cast<std::ptrdiff_t>(start),
                           samples.begin() + static_cast<std::ptrdiff_t>(start + length));
    const std::size_t bins = length / 2 + 1;
    fftw_complex* out = fftw_alloc_complex(bins);
    static std::mutex planner;
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner);
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(length), in.data(), out, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    const double bin_hz = static_cast<double>(fs) / static_cast<double>(length);
    double best = -1.0;
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < bins; ++k) {
        if (static_cast<double>(k) * bin_hz < min_hz) continue;
        const double mag = std::hypot(out[k][0], out[k][1]);
        if (mag > best) {
            best = mag;
            best_k = k;
        }
    }
    {
        std::lock_guard<std::mutex> lock(planner);
        fftw_destroy_plan(plan);
    }
    fftw_free(out);
    return static_cast<double>(best_k) * bin_hz;
}

}  // namespace swv
