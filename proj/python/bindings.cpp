#include "swv/errors.hpp"
#include "swv/pipeline.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace swv;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ShapeKind shape_arg(const std::string& name) {
    const auto kind = parse_shape_kind(name);
    if (!kind) throw ConfigError("unknown shape '" + name + "'");
    return *kind;
}

PipelineConfig config_from(const py::dict& overrides) {
    PipelineConfig cfg;
    for (const auto& [k, v] : overrides) cfg.set(py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
    cfg.validate();
    return cfg;
}

py::object to_python(const nlohmann::json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

// (frames, ny, nx) array; frame j is grid row j.
DoubleArray series_array(const ScalarFieldSeries& s) {
    DoubleArray out({s.frames.size(), s.grid.ny, s.grid.nx});
    double* dst = out.mutable_data();
    for (const Frame& f : s.frames) {
        std::memcpy(dst, f.values().data(), f.values().size() * sizeof(double));
        dst += f.values().size();
    }
    return out;
}

ScalarFieldSeries series_from(const DoubleArray& frames, double frame_dt, double fps) {
    if (frames.ndim() != 3) throw InputError("frames must be a (count, ny, nx) array");
    ScalarFieldSeries s;
    s.grid.ny = static_cast<std::size_t>(frames.shape(1));
    s.grid.nx = static_cast<std::size_t>(frames.shape(2));
    s.frame_dt = frame_dt;
    s.frame_rate_playback = fps;
    const double* src = frames.data();
    const std::size_t n = s.grid.cells();
    for (py::ssize_t k = 0; k < frames.shape(0); ++k, src += n)
        s.frames.emplace_back(s.grid.nx, s.grid.ny, std::vector<double>(src, src + n));
    s.validate();
    return s;
}

Frame frame_from(const DoubleArray& a) {
    if (a.ndim() != 2) throw InputError("frame must be a (ny, nx) array");
    const auto ny = static_cast<std::size_t>(a.shape(0));
    const auto nx = static_cast<std::size_t>(a.shape(1));
    return Frame(nx, ny, std::vector<double>(a.data(), a.data() + nx * ny));
}

py::array_t<std::uint8_t> mask_array(const ShapeMask& m) {
    py::array_t<std::uint8_t> out({m.grid.ny, m.grid.nx});
    std::memcpy(out.mutable_data(), m.inside.data(), m.inside.size());
    return out;
}

py::array_t<std::uint8_t> image_array(const Image& img) {
    py::array_t<std::uint8_t> out({img.height, img.width, std::size_t{3}});
    std::memcpy(out.mutable_data(), img.rgb.data(), img.rgb.size());
    return out;
}

// Mono clips come back 1-D, stereo as (frames, 2).
DoubleArray clip_array(const AudioClip& clip) {
    if (clip.channels == 1) {
        DoubleArray out(static_cast<py::ssize_t>(clip.samples.size()));
        std::memcpy(out.mutable_data(), clip.samples.data(), clip.samples.size() * sizeof(double));
        return out;
    }
    DoubleArray out({clip.frames(), static_cast<std::size_t>(clip.channels)});
    std::memcpy(out.mutable_data(), clip.samples.data(), clip.samples.size() * sizeof(double));
    return out;
}

AudioClip clip_from(const DoubleArray& a, int fs) {
    AudioClip clip;
    clip.fs = fs;
    if (a.ndim() == 1) {
        clip.channels = 1;
    } else if (a.ndim() == 2) {
        clip.channels = static_cast<int>(a.shape(1));
    } else {
        throw InputError("audio must be a 1-D or (frames, channels) array");
    }
    clip.samples.assign(a.data(), a.data() + a.size());
    clip.validate();
    return clip;
}

SonifyConfig sonify_config(double f0, int fs, double fps, double gain, int frames_per_period) {
    SonifyConfig c;
    c.f0 = f0;
    c.fs = fs;
    c.fps = fps;
    c.gain = gain;
    c.frames_per_period = frames_per_period;
    c.validate();
    return c;
}

WavFormat wav_format(const std::string& name) {
    if (name == "pcm16") return WavFormat::Pcm16;
    if (name == "float32") return WavFormat::Float32;
    throw ConfigError("wav format must be pcm16 or float32");
}

py::dict loop_dict(const LoopSpec& l) {
    py::dict d;
    d["transient_end"] = l.transient_end;
    d["loop_start"] = l.loop_start;
    d["loop_end"] = l.loop_end;
    d["fallback"] = l.fallback;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spin-wave simulation, sonification and rendering";

    auto base = py::register_exception<Error>(m, "SpinwaveError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<ManifestError>(m, "ManifestError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());

    m.def("shapes", [] {
        std::vector<std::string> names;
        for (ShapeKind k : kAllShapes) names.emplace_back(to_string(k));
        return names;
    }, "Shape names in pedal order.");

    m.def("config_keys", &PipelineConfig::keys);

    m.def("default_config", [](const py::dict& overrides) { return to_python(config_from(overrides).to_json()); },
          py::arg("overrides") = py::dict());

    m.def("rasterize", [](const std::string& shape, double scale) {
        return mask_array(rasterize_shape(default_params(shape_arg(shape)), scaled_grid(scale)));
    }, py::arg("shape"), py::arg("scale") = 1.0, "Material mask as a (ny, nx) uint8 array.");

    m.def("simulate", [](const std::string& shape, const py::dict& overrides) {
        const PipelineConfig cfg = config_from(overrides);
        const SimConfig sim = cfg.sim_config(shape_arg(shape));
        ScalarFieldSeries raw;
        {
            py::gil_scoped_release release;
            raw = run_excitation(sim);
        }
        const NormalizedSeries n = normalize_series(raw);
        return py::make_tuple(series_array(n.series), n.series.frame_dt, n.scale);
    }, py::arg("shape"), py::arg("overrides") = py::dict(),
       "Relax and drive one shape. Returns (normalized m_z frames, frame_dt, normalization factor).");

    m.def("read_stack", [](const fs::path& path) {
        const FrameStack st = read_frame_stack(path);
        return py::make_tuple(series_array(st.series), st.series.frame_dt, st.scale);
    }, py::arg("path"));

    m.def("write_stack", [](const fs::path& path, const DoubleArray& frames, double frame_dt, double scale) {
        write_frame_stack(series_from(frames, frame_dt, 10.0), scale, path);
    }, py::arg("path"), py::arg("frames"), py::arg("frame_dt"), py::arg("scale") = 1.0);

    m.def("synthesize", [](const DoubleArray& frames, const std::string& shape, double f0, int fs, double fps, double gain,
                           const std::string& path, std::size_t waypoints) {
        const ScalarFieldSeries s = series_from(frames, 1.0, fps);
        const auto kind = parse_path_kind(path);
        if (!kind) throw ConfigError("unknown path kind '" + path + "'");
        const SamplingPath p = build_path(mask_from_series(s, shape_arg(shape)), *kind, waypoints);
        return clip_array(scan_synthesize(s, p, sonify_config(f0, fs, fps, gain, 20)));
    }, py::arg("frames"), py::arg("shape") = "strip", py::arg("f0") = 110.0, py::arg("fs") = 44100, py::arg("fps") = 10.0,
       py::arg("gain") = 1.0, py::arg("path") = "scanline-pingpong", py::arg("waypoints") = 256,
       "Scanned synthesis of a frame stack along a path inside the data's material cells.");

    m.def("detect_loop", [](const DoubleArray& frames, double f0, int fs, double fps, int frames_per_period,
                            std::optional<DoubleArray> clip) {
        const ScalarFieldSeries s = series_from(frames, 1.0, fps);
        const ShapeMask mask = mask_from_series(s);
        std::vector<double> samples;
        if (clip) samples.assign(clip->data(), clip->data() + clip->size());
        return loop_dict(detect_loop_points(s, sonify_config(f0, fs, fps, 1.0, frames_per_period), samples, &mask));
    }, py::arg("frames"), py::arg("f0") = 110.0, py::arg("fs") = 44100, py::arg("fps") = 10.0,
       py::arg("frames_per_period") = 20, py::arg("clip") = py::none());

    m.def("render_frame", [](const DoubleArray& frame, const std::string& mode, std::size_t scale,
                             std::optional<py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>> mask) {
        const Frame f = frame_from(frame);
        ShapeMask sm;
        sm.grid.nx = f.nx();
        sm.grid.ny = f.ny();
        if (mask) {
            if (mask->ndim() != 2 || static_cast<std::size_t>(mask->shape(0)) != f.ny() ||
                static_cast<std::size_t>(mask->shape(1)) != f.nx())
                throw InputError("mask shape must match the frame");
            sm.inside.assign(mask->data(), mask->data() + mask->size());
        } else {
            sm.inside.assign(f.nx() * f.ny(), 1);
        }
        const auto m = parse_render_mode(mode);
        if (!m) throw ConfigError("render mode must be heatmap or ridgeline");
        RenderSettings settings;
        settings.scale = scale;
        return image_array(render_frame(f, sm, settings, *m));
    }, py::arg("frame"), py::arg("mode") = "heatmap", py::arg("scale") = 2, py::arg("mask") = py::none(),
       "RGB image as a (height, width, 3) uint8 array.");

    m.def("read_wav", [](const fs::path& path) {
        const AudioClip clip = read_wav(path);
        return py::make_tuple(clip_array(clip), clip.fs);
    }, py::arg("path"));

    m.def("write_wav", [](const fs::path& path, const DoubleArray& audio, int fs, const std::string& format) {
        write_wav(clip_from(audio, fs), path, wav_format(format));
    }, py::arg("path"), py::arg("audio"), py::arg("fs") = 44100, py::arg("format") = "pcm16");

    m.def("run_pipeline", [](const fs::path& out, const py::dict& overrides, std::optional<fs::path> ingest_ovf) {
        const PipelineConfig cfg = config_from(overrides);
        PipelineReport report;
        {
            py::gil_scoped_release release;
            report = run_pipeline(cfg, SessionLayout{out}, ingest_ovf);
        }
        return to_python(manifest_to_json(report.manifest));
    }, py::arg("out"), py::arg("overrides") = py::dict(), py::arg("ingest_ovf") = py::none(),
       "Simulate (or ingest), sonify and render into `out`. Returns the session manifest.");

    m.def("trigger", [](const fs::path& manifest, const std::vector<std::pair<std::string, double>>& requests,
                        double duration) {
        std::vector<TriggerRequest> reqs;
        for (const auto& [name, offset] : requests) reqs.push_back({shape_arg(name), offset});
        const AudioClip clip = trigger_session(manifest, reqs, duration);
        return py::make_tuple(clip_array(clip), clip.fs);
    }, py::arg("manifest"), py::arg("requests"), py::arg("duration"),
       "Offline pedal presses: (shape, offset seconds) pairs held for `duration`. Returns ((frames, 2) audio, fs).");
}
