#include "swv/pipeline.hpp"

#include "swv/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace swv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                      std::string(expected) + ")");
}

double parse_real(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) bad_value(key, v, "a number");
    return out;
}

long parse_int(std::string_view key, std::string_view v) {
    long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    bad_value(key, v, "true or false");
}

std::vector<ShapeKind> parse_shapes(std::string_view key, std::string_view v) {
    if (v == "all") return {kAllShapes.begin(), kAllShapes.end()};
    std::vector<ShapeKind> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        const std::string_view name = trim(v.substr(0, comma));
        const auto kind = parse_shape_kind(name);
        if (!kind) bad_value(key, name, "vase, ellipse, pyramid, strip, wave or all");
        if (std::find(out.begin(), out.end(), *kind) == out.end()) out.push_back(*kind);
        v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
    }
    if (out.empty()) bad_value(key, v, "at least one shape");
    std::sort(out.begin(), out.end(), [](ShapeKind a, ShapeKind b) { return pedal_index(a) < pedal_index(b); });
    return out;
}

struct KeyDef {
    std::string name;
    std::function<void(PipelineConfig&, std::string_view)> set;
    std::function<nlohmann::json(const PipelineConfig&)> get;
};

const std::vector<KeyDef>& key_table() {
    static const std::vector<KeyDef> table = [] {
        std::vector<KeyDef> t;
        auto real = [&t](std::string name, double PipelineConfig::*field) {
            t.push_back({name, [name, field](PipelineConfig& c, std::string_view v) { c.*field = parse_real(name, v); },
                         [field](const PipelineConfig& c) { return nlohmann::json(c.*field); }});
        };
        auto real_in = [&t](std::string name, auto get_ref) {
            t.push_back({name, [name, get_ref](PipelineConfig& c, std::string_view v) { get_ref(c) = parse_real(name, v); },
                         [get_ref](const PipelineConfig& c) { return nlohmann::json(get_ref(const_cast<PipelineConfig&>(c))); }});
        };
        auto int_in = [&t](std::string name, auto get_ref) {
            t.push_back({name,
                         [name, get_ref](PipelineConfig& c, std::string_view v) {
                             using T = std::remove_reference_t<decltype(get_ref(c))>;
                             const long n = parse_int(name, v);
                             if (n < 0) bad_value(name, v, "a non-negative integer");
                             get_ref(c) = static_cast<T>(n);
                         },
                         [get_ref](const PipelineConfig& c) { return nlohmann::json(get_ref(const_cast<PipelineConfig&>(c))); }});
        };

        real("scale", &PipelineConfig::scale);
        t.push_back({"shapes", [](PipelineConfig& c, std::string_view v) { c.shapes = parse_shapes("shapes", v); },
                     [](const PipelineConfig& c) {
                         nlohmann::json a = nlohmann::json::array();
                         for (ShapeKind k : c.shapes) a.push_back(std::string(to_string(k)));
                         return a;
                     }});
        int_in("jobs", [](PipelineConfig& c) -> int& { return c.jobs; });

        real_in("material.ms", [](PipelineConfig& c) -> double& { return c.material.ms; });
        real_in("material.alpha", [](PipelineConfig& c) -> double& { return c.material.alpha; });
        real_in("material.aex", [](PipelineConfig& c) -> double& { return c.material.aex; });
        real_in("material.g_factor", [](PipelineConfig& c) -> double& { return c.material.g_factor; });
        real_in("excitation.b_static", [](PipelineConfig& c) -> double& { return c.excitation.b_static; });
        real_in("excitation.f_mw", [](PipelineConfig& c) -> double& { return c.excitation.f_mw; });
        real_in("excitation.h_mw", [](PipelineConfig& c) -> double& { return c.excitation.h_mw; });
        int_in("excitation.periods", [](PipelineConfig& c) -> int& { return c.excitation.periods_recorded; });
        int_in("excitation.frames_per_period", [](PipelineConfig& c) -> int& { return c.excitation.frames_per_period; });

        real("solver.dt", &PipelineConfig::dt);
        real("solver.relax_tolerance", &PipelineConfig::relax_tolerance);
        int_in("solver.relax_max_steps", [](PipelineConfig& c) -> long& { return c.relax_max_steps; });
        t.push_back({"solver.inplane_demag",
                     [](PipelineConfig& c, std::string_view v) { c.inplane_demag = parse_bool("solver.inplane_demag", v); },
                     [](const PipelineConfig& c) { return nlohmann::json(c.inplane_demag); }});

        int_in("audio.sample_rate", [](PipelineConfig& c) -> int& { return c.sample_rate; });
        real("audio.fps", &PipelineConfig::audio_fps);
        real("audio.gain", &PipelineConfig::gain);
        t.push_back({"audio.path",
                     [](PipelineConfig& c, std::string_view v) {
                         const auto p = parse_path_kind(v);
                         if (!p || *p == PathKind::Custom) bad_value("audio.path", v, "scanline-pingpong or racetrack");
                         c.path = *p;
                     },
                     [](const PipelineConfig& c) { return nlohmann::json(std::string(to_string(c.path))); }});
        int_in("audio.waypoints", [](PipelineConfig& c) -> std::size_t& { return c.path_waypoints; });
        t.push_back({"audio.format",
                     [](PipelineConfig& c, std::string_view v) {
                         if (v == "pcm16") {
                             c.wav_format = WavFormat::Pcm16;
                         } else if (v == "float32") {
                             c.wav_format = WavFormat::Float32;
                         } else {
                             bad_value("audio.format", v, "pcm16 or float32");
                         }
                     },
                     [](const PipelineConfig& c) { return nlohmann::json(c.wav_format == WavFormat::Pcm16 ? "pcm16" : "float32"); }});
        for (ShapeKind k : kAllShapes) {
            const std::size_t idx = pedal_index(k);
            real_in("audio.f0." + std::string(to_string(k)), [idx](PipelineConfig& c) -> double& { return c.fundamentals[idx]; });
        }

        t.push_back({"render.mode",
                     [](PipelineConfig& c, std::string_view v) {
                         const auto m = parse_render_mode(v);
                         if (!m) bad_value("render.mode", v, "heatmap or ridgeline");
                         c.render_mode = *m;
                     },
                     [](const PipelineConfig& c) { return nlohmann::json(std::string(to_string(c.render_mode))); }});
        int_in("render.scale", [](PipelineConfig& c) -> std::size_t& { return c.render.scale; });
        int_in("render.ridge_rows", [](PipelineConfig& c) -> std::size_t& { return c.render.ridge_rows; });
        real_in("render.gain", [](PipelineConfig& c) -> double& { return c.render.displacement_gain; });
        real_in("render.view_deg", [](PipelineConfig& c) -> double& { return c.render.view_deg; });
        return t;
    }();
    return table;
}

}  // namespace

const std::vector<std::string>& PipelineConfig::keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& k : key_table()) out.push_back(k.name);
        return out;
    }();
    return names;
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    for (const auto& k : key_table()) {
        if (k.name == key) {
            k.set(*this, value);
            return;
        }
    }
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

void PipelineConfig::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view l = line;
        if (const auto hash = l.find('#'); hash != std::string_view::npos) l = l.substr(0, hash);
        l = trim(l);
        if (l.empty()) continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected 'key = value'");
        }
        try {
            set(l.substr(0, eq), l.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
        }
    }
}

void PipelineConfig::validate() const {
    try {
        const GridSpec grid = scaled_grid(scale);
        if (shapes.empty()) throw ConfigError("no shapes selected");
        if (jobs < 1) throw ConfigError("jobs must be at least 1");
        material.validate();
        excitation.validate();
        if (dt < 0.0) throw ConfigError("solver.dt must be non-negative");
        if (!(relax_tolerance > 0.0)) throw ConfigError("solver.relax_tolerance must be positive");
        if (relax_max_steps < 1) throw ConfigError("solver.relax_max_steps must be positive");
        if (audio_fps < 0.0) throw ConfigError("audio.fps must be non-negative");
        if (path_waypoints < 2 || path_waypoints > 100000) throw ConfigError("audio.waypoints must lie in [2, 100000]");
        for (ShapeKind k : shapes) sonify_config(k).validate();
        render.validate(grid);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

SimConfig PipelineConfig::sim_config(ShapeKind kind) const {
    SimConfig c = SimConfig::for_shape(kind, scaled_grid(scale));
    c.material = material;
    c.excitation = excitation;
    c.dt = dt;
    c.relax_tolerance = relax_tolerance;
    c.relax_max_steps = relax_max_steps;
    c.inplane_demag = inplane_demag;
    return c;
}

SonifyConfig PipelineConfig::sonify_config(ShapeKind kind) const {
    SonifyConfig c;
    c.f0 = fundamental(kind);
    c.fs = sample_rate;
    c.fps = playback_fps();
    c.gain = gain;
    c.frames_per_period = excitation.frames_per_period;
    return c;
}

nlohmann::json PipelineConfig::to_json() const {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& k : key_table()) doc[k.name] = k.get(*this);
    return doc;
}

ShapeKind shape_from_path(const fs::path& path) {
    const auto kind = parse_shape_kind(path.stem().string());
    if (!kind) {
        throw InputError("cannot tell the shape of " + path.string() + " (file stem must be a shape name)");
    }
    return *kind;
}

namespace {

// Later stages see exactly what a reload of the stored stack yields.
FrameStack store_stack(const ScalarFieldSeries& series, double scale, const fs::path& path, double display_fps) {
    write_frame_stack(series, scale, path);
    FrameStack stored = read_frame_stack(path);
    stored.series.frame_rate_playback = display_fps;
    return stored;
}

ShapeMask data_mask(const FrameStack& stack, ShapeKind kind) {
    ShapeMask mask = mask_from_series(stack.series, kind);
    if (mask.count() == 0) throw InputError("frame stack holds no nonzero cells");
    return mask;
}

}  // namespace

FrameStack simulate_shape(const PipelineConfig& cfg, ShapeKind kind, const SessionLayout& out, const LogFn& log) {
    const SimConfig sim = cfg.sim_config(kind);
    const std::string name(to_string(kind));
    int last_decile = -1;
    const auto run = run_excitation_detailed(sim, [&](int frame, int total) {
        const int decile = total > 0 ? frame * 10 / total : 10;
        if (log && decile != last_decile) {
            last_decile = decile;
            log("simulate " + name + ": frame " + std::to_string(frame) + "/" + std::to_string(total));
        }
    });
    const NormalizedSeries norm = normalize_series(run.series);
    FrameStack stack = store_stack(norm.series, norm.scale, out.stack(kind), cfg.display_fps());
    if (log) log("simulate " + name + ": wrote " + out.stack(kind).string());
    return stack;
}

FrameStack ingest_ovf_shape(const PipelineConfig& cfg, const fs::path& dir, ShapeKind kind) {
    const fs::path shape_dir = dir / std::string(to_string(kind));
    if (!fs::is_directory(shape_dir)) throw InputError("no OVF directory " + shape_dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(shape_dir)) {
        if (e.is_regular_file() && e.path().extension() == ".ovf") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InputError("no .ovf files in " + shape_dir.string());
    ScalarFieldSeries series;
    for (const fs::path& f : files) {
        const VectorField field = read_ovf(f);
        if (series.frames.empty()) {
            series.grid = field.grid;
        } else if (field.grid.nx != series.grid.nx || field.grid.ny != series.grid.ny) {
            throw InputError("OVF mesh of " + f.string() + " differs from the first file");
        }
        series.frames.push_back(field.mz());
    }
    series.frame_dt = cfg.excitation.period() / cfg.excitation.frames_per_period;
    NormalizedSeries norm = normalize_series(series);
    FrameStack stack{std::move(norm.series), norm.scale};
    stack.series.frame_rate_playback = cfg.display_fps();
    return stack;
}


SonifyResult sonify_stack(const PipelineConfig& cfg, ShapeKind kind, const FrameStack& stack, const SessionLayout& out,
                          std::optional<double> f0) {
    SonifyConfig scfg = cfg.sonify_config(kind);
    if (f0) scfg.f0 = *f0;
    try {
        scfg.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
    const ShapeMask mask = data_mask(stack, kind);
    const SamplingPath path = build_path(mask, cfg.path, cfg.path_waypoints);
    SonifyResult res;
    res.clip = scan_synthesize(stack.series, path, scfg);
    const LoopSpec loop = detect_loop_points(stack.series, scfg, res.clip.samples, &mask);
    write_wav(res.clip, out.audio(kind), cfg.wav_format);
    fs::create_directories(out.frames(kind));

    const std::string name(to_string(kind));
    ShapeRecord& r = res.record;
    r.kind = kind;
    r.audio = "audio/" + name + ".wav";
    r.loop = loop;
    r.fundamental_hz = scfg.f0;
    r.pan = default_pan(kind);
    r.frames_dir = "frames/" + name;
    r.display_fps = cfg.display_fps();
    r.frame_count = stack.series.frames.size();
    r.audio_length = res.clip.frames();
    return res;
}

AnimationInfo render_stack(const PipelineConfig& cfg, ShapeKind kind, const FrameStack& stack, const SessionLayout& out) {
    const ShapeMask mask = data_mask(stack, kind);
    const fs::path dir = out.frames(kind);
    fs::create_directories(dir);
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string n = e.path().filename().string();
        if (n.rfind("frame_", 0) == 0 && e.path().extension() == ".ppm") fs::remove(e.path());
    }
    std::size_t width = 0;
    std::size_t height = 0;
    const AnimationInfo info =
        render_animation(stack.series, mask, cfg.render, cfg.render_mode, cfg.excitation.frames_per_period,
                         [&](std::size_t k, const Image& img) {
                             width = img.width;
                             height = img.height;
                             write_ppm(img, dir / frame_file_name(k));
                         });
    const nlohmann::json timing = {{"fps", info.fps},       {"frame_count", info.frame_count}, {"duration_s", info.duration_s()},
                                   {"mode", std::string(to_string(cfg.render_mode))}, {"width", width}, {"height", height}};
    const std::string text = timing.dump(2) + "\n";
    write_file_bytes(dir / "timing.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
    return info;
}

SessionManifest update_manifest(const PipelineConfig& cfg, const SessionLayout& out, const std::vector<ShapeRecord>& records) {
    SessionManifest m;
    if (fs::exists(out.manifest())) {
        try {
            const auto bytes = read_file_bytes(out.manifest(), 64u << 20);
            const SessionManifest old = manifest_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
            if (old.sample_rate == cfg.sample_rate) m.shapes = old.shapes;
        } catch (const std::exception&) {
            // An unreadable manifest is replaced.
        }
    }
    for (const ShapeRecord& r : records) {
        std::erase_if(m.shapes, [&](const ShapeRecord& s) { return s.kind == r.kind; });
        m.shapes.push_back(r);
    }
    std::sort(m.shapes.begin(), m.shapes.end(),
              [](const ShapeRecord& a, const ShapeRecord& b) { return pedal_index(a.kind) < pedal_index(b.kind); });
    m.sample_rate = cfg.sample_rate;
    m.config = cfg.to_json();
    write_manifest(m, out.manifest());
    return m;
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                fn(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    // The first failure in index order wins, independent of scheduling.
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

PipelineReport run_pipeline(const PipelineConfig& cfg, const SessionLayout& out, const std::optional<fs::path>& ingest_ovf,
                            const LogFn& log) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    std::mutex log_mutex;
    const LogFn safe_log = [&](const std::string& line) {
        if (!log) return;
        std::lock_guard<std::mutex> lock(log_mutex);
        log(line);
    };

    const std::size_t n = cfg.shapes.size();
    std::vector<ShapeRecord> records(n);
    std::vector<double> sim_seconds(n, 0.0);
    parallel_for(n, cfg.jobs, [&](std::size_t k) {
        const ShapeKind kind = cfg.shapes[k];
        const auto s0 = std::chrono::steady_clock::now();
        FrameStack stack;
        if (ingest_ovf) {
            const FrameStack ingested = ingest_ovf_shape(cfg, *ingest_ovf, kind);
            stack = store_stack(ingested.series, ingested.scale, out.stack(kind), cfg.display_fps());
        } else {
            stack = simulate_shape(cfg, kind, out, safe_log);
        }
        sim_seconds[k] = std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
        records[k] = sonify_stack(cfg, kind, stack, out).record;
        safe_log("sonify " + std::string(to_string(kind)) + ": loop [" + std::to_string(records[k].loop.loop_start) + ", " +
                 std::to_string(records[k].loop.loop_end) + ")" + (records[k].loop.fallback ? " (fallback)" : ""));
        render_stack(cfg, kind, stack, out);
        safe_log("render " + std::string(to_string(kind)) + ": " + std::to_string(stack.series.frames.size()) + " frames");
    });

    PipelineReport report;
    update_manifest(cfg, out, records);
    report.manifest = validate_manifest(out.manifest());
    report.simulate_seconds = sim_seconds;
    report.total_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

AudioClip trigger_session(const fs::path& manifest, const std::vector<TriggerRequest>& requests, double duration_s) {
    if (requests.empty()) throw ConfigError("trigger needs at least one shape");
    if (!(duration_s >= 0.0) || !std::isfinite(duration_s)) throw ConfigError("duration must be non-negative");
    const SessionManifest m = validate_manifest(manifest);
    std::vector<AudioClip> streams;
    std::vector<std::size_t> offsets;
    for (const TriggerRequest& req : requests) {
        if (!(req.offset_s >= 0.0) || !std::isfinite(req.offset_s)) throw ConfigError("trigger offsets must be non-negative");
        const auto it = std::find_if(m.shapes.begin(), m.shapes.end(), [&](const ShapeRecord& r) { return r.kind == req.kind; });
        if (it == m.shapes.end()) throw ManifestError("manifest has no record for " + std::string(to_string(req.kind)));
        const AudioClip clip = read_wav(manifest.parent_path() / it->audio);
        if (clip.channels != 1) throw InputError("shape audio must be mono: " + it->audio);
        streams.push_back(pan(render_trigger(clip, it->loop, duration_s), it->pan));
        offsets.push_back(static_cast<std::size_t>(std::llround(req.offset_s * m.sample_rate)));
    }
    return mix(streams, offsets);
}

}  // namespace swv
