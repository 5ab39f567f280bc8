// swv: simulate, sonify, render and trigger spin-wave shape sessions.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data error.

#include "swv/errors.hpp"
#include "swv/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace {

using namespace swv;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

// A data failure annotated with the stage and the file it concerns.
struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::vector<std::string> shapes;
    double scale = 0.0;  // 0 keeps the configured value
    int jobs = 0;
    std::string mode;
};

struct Status {
    std::string command;
    std::vector<std::string> outputs;
    nlohmann::json extra = nlohmann::json::object();
};

std::mutex g_log_mutex;

void progress(const std::string& line) {
    std::lock_guard<std::mutex> lock(g_log_mutex);
    std::cerr << "swv: " << line << std::endl;
}

fs::path output_root(const Common& c) {
    if (!c.out_dir.empty()) return c.out_dir;
    if (const char* env = std::getenv("SWV_OUTPUT_ROOT"); env && *env) return env;
    return "swv_out";
}

// Validates a shape list token by token so a bad name is a usage error.
std::string shape_list_check(const std::string& value) {
    if (value == "all") return {};
    std::string_view v = value;
    while (!v.empty()) {
        const auto comma = v.find(',');
        const std::string name(v.substr(0, comma));
        if (!parse_shape_kind(name)) return "unknown shape '" + name + "' (vase, ellipse, pyramid, strip, wave or all)";
        v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
    }
    return {};
}

PipelineConfig build_config(const Common& c) {
    PipelineConfig cfg;
    if (!c.config_file.empty()) cfg.load_file(c.config_file);
    for (const std::string& kv : c.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
    }
    if (!c.shapes.empty()) {
        std::string joined;
        for (const auto& s : c.shapes) joined += (joined.empty() ? "" : ",") + s;
        cfg.set("shapes", joined);
    }
    if (c.scale != 0.0) cfg.scale = c.scale;
    if (c.jobs != 0) cfg.jobs = c.jobs;
    if (!c.mode.empty()) cfg.set("render.mode", c.mode);
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_file, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "override one configuration key (key=value), repeatable");
    cmd->add_option("--out", c.out_dir, "output root (default: $SWV_OUTPUT_ROOT or ./swv_out)");
}

void add_shape_options(CLI::App* cmd, Common& c) {
    cmd->add_option("--shape", c.shapes, "shape name, comma list or 'all' (default all)")
        ->check(CLI::Validator(shape_list_check, "SHAPE"));
    cmd->add_option("--scale", c.scale, "uniform grid scale factor")->check(CLI::PositiveNumber);
    cmd->add_option("--jobs", c.jobs, "shapes processed concurrently")->check(CLI::Range(1, 64));
}

FrameStack load_stack(const fs::path& path) {
    try {
        return read_frame_stack(path);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError("read " + path.string() + ": " + e.what());
    }
}

template <class Fn>
auto in_stage(const std::string& stage, const std::string& what, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage + " " + what + ": " + e.what());
    }
}

void cmd_simulate(const Common& c, Status& st) {
    const PipelineConfig cfg = build_config(c);
    const SessionLayout out{output_root(c)};
    parallel_for(cfg.shapes.size(), cfg.jobs, [&](std::size_t k) {
        const ShapeKind kind = cfg.shapes[k];
        in_stage("simulate", std::string(to_string(kind)), [&] { return simulate_shape(cfg, kind, out, progress); });
    });
    for (ShapeKind kind : cfg.shapes) st.outputs.push_back(out.stack(kind).string());
}

void cmd_mask(const Common& c, Status& st) {
    const PipelineConfig cfg = build_config(c);
    const fs::path dir = output_root(c) / "masks";
    for (ShapeKind kind : cfg.shapes) {
        const fs::path path = dir / (std::string(to_string(kind)) + ".pbm");
        write_pbm(cfg.sim_config(kind).mask, path);
        st.outputs.push_back(path.string());
    }
}

struct SonifyArgs {
    std::vector<std::string> stacks;
    std::vector<std::string> f0;
};

void cmd_sonify(const Common& c, const SonifyArgs& a, Status& st) {
    const PipelineConfig base = build_config(c);
    std::vector<ShapeKind> kinds;
    for (const auto& s : a.stacks) {
        const auto kind = parse_shape_kind(fs::path(s).stem().string());
        if (!kind) throw ConfigError("cannot tell the shape of " + s + " (file stem must be a shape name)");
        kinds.push_back(*kind);
    }
    // --f0 HZ applies to a single stack; --f0 SHAPE=HZ names the shape.
    PipelineConfig cfg = base;
    for (const std::string& spec : a.f0) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            if (a.stacks.size() != 1) throw ConfigError("--f0 " + spec + " is ambiguous with several stacks; use --f0 SHAPE=HZ");
            cfg.set("audio.f0." + std::string(to_string(kinds.front())), spec);
        } else {
            const std::string name = spec.substr(0, eq);
            if (!parse_shape_kind(name)) throw ConfigError("unknown shape '" + name + "' in --f0");
            cfg.set("audio.f0." + name, spec.substr(eq + 1));
        }
    }
    cfg.validate();
    const SessionLayout out{output_root(c)};
    std::vector<ShapeRecord> records(a.stacks.size());
    parallel_for(a.stacks.size(), cfg.jobs, [&](std::size_t k) {
        const FrameStack stack = load_stack(a.stacks[k]);
        records[k] = in_stage("sonify", a.stacks[k], [&] { return sonify_stack(cfg, kinds[k], stack, out).record; });
        progress("sonify " + std::string(to_string(kinds[k])) + ": " + out.audio(kinds[k]).string());
    });
    update_manifest(cfg, out, records);
    for (ShapeKind kind : kinds) st.outputs.push_back(out.audio(kind).string());
    st.outputs.push_back(out.manifest().string());
}

void cmd_render(const Common& c, const std::vector<std::string>& stacks, Status& st) {
    const PipelineConfig cfg = build_config(c);
    const SessionLayout out{output_root(c)};
    std::vector<ShapeKind> kinds;
    for (const auto& s : stacks) {
        const auto kind = parse_shape_kind(fs::path(s).stem().string());
        if (!kind) throw ConfigError("cannot tell the shape of " + s + " (file stem must be a shape name)");
        kinds.push_back(*kind);
    }
    parallel_for(stacks.size(), cfg.jobs, [&](std::size_t k) {
        const FrameStack stack = load_stack(stacks[k]);
        const AnimationInfo info = in_stage("render", stacks[k], [&] { return render_stack(cfg, kinds[k], stack, out); });
        progress("render " + std::string(to_string(kinds[k])) + ": " + std::to_string(info.frame_count) + " frames at " +
                 std::to_string(info.fps) + " fps");
    });
    for (ShapeKind kind : kinds) st.outputs.push_back(out.frames(kind).string());
}

void cmd_pipeline(const Common& c, const std::string& ingest, Status& st) {
    const PipelineConfig cfg = build_config(c);
    const SessionLayout out{output_root(c)};
    std::optional<fs::path> ovf;
    if (!ingest.empty()) ovf = fs::path(ingest);
    const PipelineReport report = in_stage("pipeline", out.root.string(), [&] { return run_pipeline(cfg, out, ovf, progress); });
    st.outputs.push_back(out.manifest().string());
    st.extra["total_seconds"] = report.total_seconds;
    progress("pipeline: " + std::to_string(report.manifest.shapes.size()) + " shapes in " +
             std::to_string(report.total_seconds) + " s");
}

struct TriggerArgs {
    std::string manifest;
    std::vector<std::string> shapes;
    double duration = 0.0;
    std::string out_wav;
    std::string format = "pcm16";
};

void cmd_trigger(const Common& c, const TriggerArgs& a, Status& st) {
    std::vector<TriggerRequest> requests;
    for (const std::string& spec : a.shapes) {
        const auto at = spec.find('@');
        const std::string name = spec.substr(0, at);
        const auto kind = parse_shape_kind(name);
        if (!kind) throw ConfigError("unknown shape '" + name + "' in --shape");
        TriggerRequest r{*kind, 0.0};
        if (at != std::string::npos) {
            const std::string_view text = std::string_view(spec).substr(at + 1);
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), r.offset_s);
            if (ec != std::errc() || ptr != text.data() + text.size() || !(r.offset_s >= 0.0)) {
                throw ConfigError("bad offset in --shape " + spec + " (expected NAME@SECONDS)");
            }
        }
        requests.push_back(r);
    }
    const fs::path manifest = a.manifest.empty() ? SessionLayout{output_root(c)}.manifest() : fs::path(a.manifest);
    const AudioClip clip = in_stage("trigger", manifest.string(), [&] { return trigger_session(manifest, requests, a.duration); });
    write_wav(clip, a.out_wav, a.format == "float32" ? WavFormat::Float32 : WavFormat::Pcm16);
    st.outputs.push_back(a.out_wav);
    st.extra["frames"] = clip.frames();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spin-wave shape sessions: simulate, sonify, render, trigger"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    bool json_status = false;
    app.add_flag("--json-status", json_status, "print a final JSON status line on stdout");

    Common common;
    Status status;

    auto* simulate = app.add_subcommand("simulate", "simulate shapes and write frame stacks");
    add_common(simulate, common);
    add_shape_options(simulate, common);

    auto* mask = app.add_subcommand("mask", "write shape masks as PBM images for inspection");
    add_common(mask, common);
    add_shape_options(mask, common);

    SonifyArgs sonify_args;
    auto* sonify = app.add_subcommand("sonify", "wavetable-scan frame stacks into WAVs and the session manifest");
    add_common(sonify, common);
    sonify->add_option("stacks", sonify_args.stacks, "frame stacks named <shape>.swvstack")->required();
    sonify->add_option("--f0", sonify_args.f0, "fundamental in Hz, or SHAPE=HZ; repeatable");

    std::vector<std::string> render_stacks;
    auto* render = app.add_subcommand("render", "render frame stacks to PPM frames");
    add_common(render, common);
    render->add_option("stacks", render_stacks, "frame stacks named <shape>.swvstack")->required();
    render->add_option("--mode", common.mode, "heatmap or ridgeline")->check(CLI::IsMember({"heatmap", "ridgeline"}));

    std::string ingest;
    auto* pipeline = app.add_subcommand("pipeline", "simulate (or ingest), sonify and render a whole session");
    add_common(pipeline, common);
    add_shape_options(pipeline, common);
    pipeline->add_option("--mode", common.mode, "heatmap or ridgeline")->check(CLI::IsMember({"heatmap", "ridgeline"}));
    pipeline->add_option("--ingest-ovf", ingest, "directory holding <shape>/*.ovf instead of simulating")
        ->check(CLI::ExistingDirectory);

    TriggerArgs trigger_args;
    auto* trigger = app.add_subcommand("trigger", "render a held trigger (transient once, then loop) to a WAV");
    add_common(trigger, common);
    trigger->add_option("--manifest", trigger_args.manifest, "session manifest (default: <out>/session.json)");
    trigger->add_option("--shape", trigger_args.shapes, "NAME or NAME@OFFSET_S; repeatable")->required();
    trigger->add_option("--duration", trigger_args.duration, "held duration in seconds")
        ->required()
        ->check(CLI::NonNegativeNumber);
    trigger->add_option("--out-wav", trigger_args.out_wav, "output WAV path")->required();
    trigger->add_option("--format", trigger_args.format, "pcm16 or float32")->check(CLI::IsMember({"pcm16", "float32"}));

    auto finish = [&](int code, const std::string& message) {
        if (json_status) {
            nlohmann::json j = {{"status", code == kExitOk ? "ok" : "error"},
                                {"command", status.command},
                                {"exit_code", code},
                                {"outputs", status.outputs}};
            if (!message.empty()) j["message"] = message;
            for (auto& [k, v] : status.extra.items()) j[k] = v;
            std::cout << j.dump() << std::endl;
        }
        return code;
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        if (rc == 0) return kExitOk;
        const auto chosen = app.get_subcommands();
        std::cerr << (chosen.empty() ? app.help() : chosen.front()->help()) << std::flush;
        return finish(kExitUsage, e.what());
    }

    try {
        if (*mask) {
            status.command = "mask";
            cmd_mask(common, status);
        } else if (*simulate) {
            status.command = "simulate";
            cmd_simulate(common, status);
        } else if (*sonify) {
            status.command = "sonify";
            cmd_sonify(common, sonify_args, status);
        } else if (*render) {
            status.command = "render";
            cmd_render(common, render_stacks, status);
        } else if (*pipeline) {
            status.command = "pipeline";
            cmd_pipeline(common, ingest, status);
        } else if (*trigger) {
            status.command = "trigger";
            cmd_trigger(common, trigger_args, status);
        }
    } catch (const ConfigError& e) {
        std::cerr << "swv: error: " << e.what() << "\nRun with --help for more information." << std::endl;
        return finish(kExitUsage, e.what());
    } catch (const std::exception& e) {
        std::cerr << "swv: error: " << e.what() << std::endl;
        return finish(kExitData, e.what());
    }
    return finish(kExitOk, "");
}
