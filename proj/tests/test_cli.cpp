#include "swv/io.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace swv;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("swv_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Run run_cli(const TempDir& dir, const std::string& args) {
    const fs::path out = dir.path / "stdout.txt";
    const fs::path err = dir.path / "stderr.txt";
    const std::string cmd = "cd '" + dir.path.string() + "' && '" SWV_CLI_PATH "' " + args + " >'" + out.string() + "' 2>'" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

// 120 frames (6 drive periods) of a travelling wave inside a rectangle, stored as strip.
void write_synthetic_stack(const fs::path& path) {
    ScalarFieldSeries s;
    s.grid = GridSpec{30, 12, 10e-9, 10e-9, 25e-9};
    s.frame_dt = 1.0 / 9.4e9 / 20.0;
    for (int k = 0; k < 120; ++k) {
        Frame f(30, 12);
        for (std::size_t j = 2; j < 10; ++j)
            for (std::size_t i = 2; i < 28; ++i)
                f.at(i, j) = std::sin(2.0 * std::numbers::pi * k / 20.0 + 0.4 * static_cast<double>(i));
        s.frames.push_back(f);
    }
    write_frame_stack(s, 1.0, path);
}

}  // namespace

TEST_CASE("help exits zero and usage errors exit two") {
    TempDir dir;
    CHECK(run_cli(dir, "--help").code == 0);
    const Run bad_shape = run_cli(dir, "simulate --shape circle");
    CHECK(bad_shape.code == 2);
    CHECK(bad_shape.err.find("circle") != std::string::npos);
    CHECK(bad_shape.err.find("Usage") != std::string::npos);
    CHECK(run_cli(dir, "").code == 2);
    CHECK(run_cli(dir, "launch").code == 2);
    CHECK(run_cli(dir, "simulate --set audio.volume=3").code == 2);
    CHECK(run_cli(dir, "simulate --set scale").code == 2);
    CHECK(run_cli(dir, "simulate --scale -1").code == 2);
    CHECK(run_cli(dir, "render --mode sketch x.swvstack").code == 2);
    CHECK(run_cli(dir, "trigger --shape strip --duration 1").code == 2);  // --out-wav missing
    CHECK(run_cli(dir, "simulate --config missing.cfg").code == 2);
}

TEST_CASE("unreadable stacks exit three naming the file") {
    TempDir dir;
    std::ofstream(dir.path / "strip.swvstack").close();
    const Run empty = run_cli(dir, "render strip.swvstack");
    CHECK(empty.code == 3);
    CHECK(empty.err.find("strip.swvstack") != std::string::npos);

    std::ofstream(dir.path / "vase.swvstack") << "SWVSTACK but not really a stack at all, just text";
    const Run corrupt = run_cli(dir, "sonify vase.swvstack");
    CHECK(corrupt.code == 3);
    CHECK(corrupt.err.find("vase.swvstack") != std::string::npos);

    CHECK(run_cli(dir, "sonify circle.swvstack").code == 2);  // shape not derivable from the name
}

TEST_CASE("sonify, render and trigger on a stored stack") {
    TempDir dir;
    write_synthetic_stack(dir.path / "strip.swvstack");

    const Run son = run_cli(dir, "sonify strip.swvstack --f0 220 --out session --json-status");
    REQUIRE(son.code == 0);
    const auto status = nlohmann::json::parse(son.out);
    CHECK(status.at("status") == "ok");
    CHECK(status.at("exit_code") == 0);
    const SessionManifest m = validate_manifest(dir.path / "session" / "session.json");
    REQUIRE(m.shapes.size() == 1);
    CHECK(m.shapes[0].fundamental_hz == 220.0);
    CHECK(m.shapes[0].pan == 0.75);
    CHECK(m.shapes[0].frame_count == 120);

    CHECK(run_cli(dir, "sonify strip.swvstack strip.swvstack --f0 220 --out session").code == 2);
    CHECK(run_cli(dir, "sonify strip.swvstack --f0 strip=30000 --out session").code == 2);

    const Run ren = run_cli(dir, "render strip.swvstack --mode ridgeline --out session");
    REQUIRE(ren.code == 0);
    const auto timing = nlohmann::json::parse(slurp(dir.path / "session/frames/strip/timing.json"));
    CHECK(timing.at("mode") == "ridgeline");
    CHECK(timing.at("frame_count") == 120);
    CHECK(fs::exists(dir.path / "session/frames/strip/frame_00119.ppm"));
    CHECK_FALSE(fs::exists(dir.path / "session/frames/strip/frame_00120.ppm"));

    const Run trig = run_cli(dir, "trigger --out session --shape strip --shape strip@0.5 --duration 1.5 --out-wav held.wav");
    REQUIRE(trig.code == 0);
    const AudioClip held = read_wav(dir.path / "held.wav");
    CHECK(held.channels == 2);
    CHECK(held.frames() == static_cast<std::size_t>(2.0 * 44100));
    CHECK(run_cli(dir, "trigger --out session --shape wave --duration 1 --out-wav x.wav").code == 3);
    CHECK(run_cli(dir, "trigger --out session --shape strip@soon --duration 1 --out-wav x.wav").code == 2);
}

TEST_CASE("the output root falls back to the environment") {
    TempDir dir;
    write_synthetic_stack(dir.path / "strip.swvstack");
    const Run r = run_cli(dir, "render strip.swvstack");
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir.path / "swv_out/frames/strip/timing.json"));
    ::setenv("SWV_OUTPUT_ROOT", (dir.path / "elsewhere").c_str(), 1);
    const Run e = run_cli(dir, "render strip.swvstack");
    ::unsetenv("SWV_OUTPUT_ROOT");
    REQUIRE(e.code == 0);
    CHECK(fs::exists(dir.path / "elsewhere/frames/strip/timing.json"));
}

TEST_CASE("masks export as PBM") {
    TempDir dir;
    const Run r = run_cli(dir, "mask --shape vase,wave --scale 0.25 --out o");
    REQUIRE(r.code == 0);
    const auto bytes = read_file_bytes(dir.path / "o/masks/vase.pbm");
    const std::string header = "P4\n125 38\n";
    CHECK(std::string(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(header.size())) == header);
    CHECK(bytes.size() == header.size() + 38 * 16);
    CHECK(fs::exists(dir.path / "o/masks/wave.pbm"));
    CHECK_FALSE(fs::exists(dir.path / "o/masks/strip.pbm"));
}

TEST_CASE("json status reports failures too") {
    TempDir dir;
    const Run r = run_cli(dir, "render nothing/strip.swvstack --json-status");
    CHECK(r.code == 3);
    const auto status = nlohmann::json::parse(r.out);
    CHECK(status.at("status") == "error");
    CHECK(status.at("exit_code") == 3);
    CHECK(status.at("message").get<std::string>().find("strip.swvstack") != std::string::npos);
}
