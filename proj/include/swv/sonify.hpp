#pragma once

#include "swv/core_field.hpp"
#include "swv/shapes.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>
#include <span>
#include <vector>

namespace swv {

enum class PathKind { ScanlinePingpong, Racetrack, Custom };

std::string_view to_string(PathKind kind);
std::optional<PathKind> parse_path_kind(std::string_view name);

struct Point2 {
    double x = 0.0;  // continuous cell coordinates; cell (i, j) is centered on (i, j)
    double y = 0.0;
};

// Closed loop through equally spaced (by arc length) waypoints.
class SamplingPath {
public:
    SamplingPath(std::vector<Point2> waypoints, PathKind kind);

    // Periodic in phase with period 1; piecewise linear between waypoints.
    Point2 position(double phase) const;

    const std::vector<Point2>& waypoints() const noexcept { return waypoints_; }
    PathKind kind() const noexcept { return kind_; }
    double length() const noexcept { return length_; }

private:
    std::vector<Point2> waypoints_;
    std::vector<double> cumulative_;  // arc length at each waypoint, closing segment last
    double length_ = 0.0;
    PathKind kind_;
};

bool mask_contains(const ShapeMask& mask, Point2 p);

// Throws PathError if the mask cannot host the path or a waypoint falls outside it.
SamplingPath build_path(const ShapeMask& mask, PathKind kind, std::size_t n_waypoints = 256);
// Custom loop; every waypoint must lie inside the mask.
SamplingPath custom_path(const ShapeMask& mask, std::vector<Point2> waypoints);

struct SonifyConfig {
    double f0 = 110.0;  // Hz
    int fs = 44100;     // Hz
    double fps = 10.0;  // simulation frames per second of audio
    double gain = 1.0;
    int frames_per_period = 20;  // frames per excitation period, for loop detection

    void validate() const;
};

struct AudioClip {
    int fs = 44100;
    int channels = 1;
    std::vector<double> samples;  // interleaved when channels == 2

    std::size_t frames() const noexcept { return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0; }
    void validate() const;
};

struct LoopSpec {
    std::size_t transient_end = 0;
    std::size_t loop_start = 0;
    std::size_t loop_end = 0;  // exclusive; always a valid sample index of the clip
    bool fallback = false;     // steady state not detected, last quarter used

    std::size_t length() const noexcept { return loop_end - loop_start; }
};

// floor(fs * frame_count / fps) samples; sample n reads the path at phase frac(f0 n / fs) and
// the series at frame position n * fps / fs, held at the last frame. Values are multiplied by
// gain and clamped to [-1, 1].
AudioClip scan_synthesize(const ScalarFieldSeries& series, const SamplingPath& path, const SonifyConfig& cfg);

std::size_t period_samples(const SonifyConfig& cfg);  // round(fs / f0)

// Per-period RMS of the mask cells (all cells nonzero in any frame when mask is null).
std::vector<double> period_rms(const ScalarFieldSeries& series, int frames_per_period, const ShapeMask* mask = nullptr);

// First period p >= 1 from which the relative RMS change stays below `threshold` for
// `run` consecutive periods; -1 if none.
long steady_onset(std::span<const double> rms, double threshold = 0.01, int run = 3);

// Steady onset from the series; the loop then covers the longest whole number of
// round(fs/f0) periods in the steady segment that is also within half a period of a whole
// number of drive periods (fpp * fs / fps samples). With a clip, the loop spans at least one
// drive period and is the longest multiple whose seam error is within twice the smallest and
// whose boundary samples differ by < 0.05; failing that, the smallest seam error.
LoopSpec detect_loop_points(const ScalarFieldSeries& series, const SonifyConfig& cfg,
                            std::span<const double> clip = {}, const ShapeMask* mask = nullptr);

// Mean absolute difference between the period after loop_start and the period after loop_end.
double loop_seam_error(std::span<const double> clip, const LoopSpec& loop, std::size_t period);

// Constant-power pan of a mono clip.
AudioClip pan(const AudioClip& mono, double position);

// Sample-wise sum of stereo clips shifted by offsets; scaled by 1/peak when the peak exceeds 1.
AudioClip mix(const std::vector<AudioClip>& clips, const std::vector<std::size_t>& offsets);

// Pedal-order fundamentals in Hz and pan positions.
std::array<double, 5> pentatonic_defaults();
std::array<double, 5> pan_positions();
double default_fundamental(ShapeKind kind);
double default_pan(ShapeKind kind);

// Transient once, then the loop repeated: out[n] = clip[n] for n < loop_start, else
// clip[loop_start + (n - loop_start) mod L]. Length = round(duration * fs).
AudioClip render_trigger(const AudioClip& mono, const LoopSpec& loop, double duration_s);

// Frequency of the largest DFT magnitude in [start, start + length), ignoring bins below min_hz.
double dominant_frequency(std::span<const double> samples, int fs, std::size_t start, std::size_t length,
                          double min_hz = 0.0);

}  // namespace swv
