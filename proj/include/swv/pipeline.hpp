#pragma once

#include "swv/io.hpp"
#include "swv/render.hpp"
#include "swv/shapes.hpp"
#include "swv/simulate.hpp"
#include "swv/sonify.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace swv {

// Every tunable of the pipeline, settable by `key = value` lines or overrides.
struct PipelineConfig {
    double scale = 1.0;
    std::vector<ShapeKind> shapes{kAllShapes.begin(), kAllShapes.end()};
    int jobs = 1;

    MaterialParams material;
    ExcitationParams excitation;
    double dt = 0.0;
    double relax_tolerance = 1e-4;
    long relax_max_steps = 400000;
    bool inplane_demag = true;

    int sample_rate = 44100;
    double audio_fps = 0.0;  // 0 means frames_per_period / 2, matching the display rate
    double gain = 1.0;
    PathKind path = PathKind::ScanlinePingpong;
    std::size_t path_waypoints = 256;
    WavFormat wav_format = WavFormat::Pcm16;
    std::array<double, 5> fundamentals = pentatonic_defaults();  // pedal order

    RenderMode render_mode = RenderMode::Heatmap;
    RenderSettings render{.scale = 1};

    // Throws ConfigError for unknown keys or unparsable values.
    void set(std::string_view key, std::string_view value);
    // `key = value` lines; '#' starts a comment.
    void load_file(const fs::path& path);
    void validate() const;

    static const std::vector<std::string>& keys();

    double display_fps() const noexcept { return excitation.frames_per_period / 2.0; }
    double playback_fps() const noexcept { return audio_fps > 0.0 ? audio_fps : display_fps(); }
    double fundamental(ShapeKind kind) const { return fundamentals[pedal_index(kind)]; }

    SimConfig sim_config(ShapeKind kind) const;
    SonifyConfig sonify_config(ShapeKind kind) const;
    nlohmann::json to_json() const;
};

// Output layout below one root directory.
struct SessionLayout {
    fs::path root;

    fs::path stack(ShapeKind kind) const { return root / "stacks" / (std::string(to_string(kind)) + ".swvstack"); }
    fs::path audio(ShapeKind kind) const { return root / "audio" / (std::string(to_string(kind)) + ".wav"); }
    fs::path frames(ShapeKind kind) const { return root / "frames" / std::string(to_string(kind)); }
    fs::path manifest() const { return root / "session.json"; }
};

using LogFn = std::function<void(const std::string&)>;

// Shape named by a file stem such as "strip" in "stacks/strip.swvstack".
ShapeKind shape_from_path(const fs::path& path);

// Simulates, normalizes and writes one frame stack.
FrameStack simulate_shape(const PipelineConfig& cfg, ShapeKind kind, const SessionLayout& out, const LogFn& log = {});

// Reads dir/<shape>/*.ovf in name order as the frames of one shape, normalized.
FrameStack ingest_ovf_shape(const PipelineConfig& cfg, const fs::path& dir, ShapeKind kind);

struct SonifyResult {
    ShapeRecord record;
    AudioClip clip;
};

// Mono WAV plus its manifest record. The mask is recovered from the data.
SonifyResult sonify_stack(const PipelineConfig& cfg, ShapeKind kind, const FrameStack& stack, const SessionLayout& out,
                          std::optional<double> f0 = std::nullopt);

// One PPM per frame plus timing.json in the shape's frame directory.
AnimationInfo render_stack(const PipelineConfig& cfg, ShapeKind kind, const FrameStack& stack, const SessionLayout& out);

// Replaces records of the same kinds in an existing manifest (if any) and writes it.
SessionManifest update_manifest(const PipelineConfig& cfg, const SessionLayout& out, const std::vector<ShapeRecord>& records);

// Runs fn(0..n-1) on up to `jobs` threads; rethrows the lowest-index failure after all finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

struct PipelineReport {
    SessionManifest manifest;
    std::vector<double> simulate_seconds;  // per shape, in cfg.shapes order
    double total_seconds = 0.0;
};

// simulate (or ingest) -> sonify -> render per shape, then the manifest.
PipelineReport run_pipeline(const PipelineConfig& cfg, const SessionLayout& out,
                            const std::optional<fs::path>& ingest_ovf = std::nullopt, const LogFn& log = {});

struct TriggerRequest {
    ShapeKind kind = ShapeKind::Strip;
    double offset_s = 0.0;
};

// Transient once then looped for `duration_s`, panned per the manifest and mixed.
AudioClip trigger_session(const fs::path& manifest, const std::vector<TriggerRequest>& requests, double duration_s);

}  // namespace swv
