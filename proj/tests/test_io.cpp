#include "swv/errors.hpp"
#include "swv/io.hpp"

#include <doctest.h>

#include <bit>
#include <cstring>
#include <functional>
#include <random>
#include <string>

#include <unistd.h>

using namespace swv;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("swv_io_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<std::uint8_t> bytes_of(std::string_view s) { return {s.begin(), s.end()}; }

void append_f32(std::vector<std::uint8_t>& out, float v) {
    const auto u = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
}

std::string ovf_header(std::size_t nx, std::size_t ny, std::size_t nz, int valuedim = 3, std::string_view mesh = "rectangular") {
    return "# OOMMF OVF 2.0\n# Segment count: 1\n# Begin: Segment\n# Begin: Header\n# meshtype: " + std::string(mesh) +
           "\n# valuedim: " + std::to_string(valuedim) + "\n# xnodes: " + std::to_string(nx) + "\n# ynodes: " +
           std::to_string(ny) + "\n# znodes: " + std::to_string(nz) +
           "\n# xstepsize: 1e-08\n# ystepsize: 2e-08\n# zstepsize: 5e-09\n# End: Header\n";
}

std::vector<std::uint8_t> binary_ovf(std::size_t nx, std::size_t ny, std::size_t nz, const std::vector<float>& values,
                                     float check = 1234567.0f) {
    auto out = bytes_of(ovf_header(nx, ny, nz) + "# Begin: Data Binary 4\n");
    append_f32(out, check);
    for (float v : values) append_f32(out, v);
    const auto tail = bytes_of("\n# End: Data Binary 4\n# End: Segment\n");
    out.insert(out.end(), tail.begin(), tail.end());
    return out;
}

ScalarFieldSeries sample_series(std::size_t nx, std::size_t ny, std::size_t frames, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    ScalarFieldSeries s;
    s.grid.nx = nx;
    s.grid.ny = ny;
    s.frame_dt = 1e-10;
    for (std::size_t k = 0; k < frames; ++k) {
        Frame f(nx, ny);
        for (double& v : f.values()) v = u(rng);  // float-representable values
        s.frames.push_back(std::move(f));
    }
    return s;
}

template <typename Fn>
ParseError::Kind parse_kind(Fn fn) {
    try {
        fn();
    } catch (const ParseError& e) {
        return e.kind();
    }
    FAIL("expected a parse error");
    return ParseError::Kind::Malformed;
}

// Every failure must surface as a library error; nothing else may escape.
void fuzz(const std::function<void(std::span<const std::uint8_t>)>& parse, const std::vector<std::uint8_t>& seed_input,
          std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    int errors = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::uint8_t> input;
        switch (trial % 3) {
            case 0: {
                input.resize(rng() % 256);
                for (auto& b : input) b = static_cast<std::uint8_t>(rng());
                break;
            }
            case 1: {
                input = seed_input;
                const int flips = 1 + static_cast<int>(rng() % 8);
                for (int f = 0; f < flips && !input.empty(); ++f) input[rng() % input.size()] = static_cast<std::uint8_t>(rng());
                break;
            }
            default: {
                input.assign(seed_input.begin(), seed_input.begin() + static_cast<std::ptrdiff_t>(rng() % (seed_input.size() + 1)));
                break;
            }
        }
        try {
            parse(input);
        } catch (const Error&) {
            ++errors;
        } catch (const std::exception& e) {
            FAIL("non-library exception: " << e.what());
        }
    }
    CHECK(errors > 500);
}

}  // namespace

TEST_CASE("frame stack round trip is bitwise and keeps header fields") {
    TempDir dir;
    const auto s = sample_series(7, 5, 4, 1);
    write_frame_stack(s, s.grid.nx == 7 ? 12.5 : 1.0, dir.path / "a.swvstack");
    const auto back = read_frame_stack(dir.path / "a.swvstack");
    CHECK(back.series.frames == s.frames);
    CHECK(back.series.grid.nx == 7);
    CHECK(back.series.grid.ny == 5);
    CHECK(back.series.frame_dt == s.frame_dt);
    CHECK(back.scale == 12.5);
    CHECK(fs::file_size(dir.path / "a.swvstack") == 40 + 4 * 7 * 5 * 4);
}

TEST_CASE("frame stack header for the default grid") {
    const auto bytes = encode_frame_stack(sample_series(500, 150, 2, 2), 1.0);
    CHECK(std::memcmp(bytes.data(), "SWVSTACK", 8) == 0);
    auto u32 = [&](std::size_t off) {
        return static_cast<std::uint32_t>(bytes[off] | bytes[off + 1] << 8 | bytes[off + 2] << 16 | bytes[off + 3] << 24);
    };
    CHECK(u32(8) == kFrameStackVersion);
    CHECK(u32(12) == 500);
    CHECK(u32(16) == 150);
    CHECK(u32(20) == 2);
}

TEST_CASE("frame stack errors are distinct") {
    auto bytes = encode_frame_stack(sample_series(4, 3, 2, 3), 1.0);
    SUBCASE("truncated payload names both byte counts") {
        const std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 10);
        try {
            decode_frame_stack(cut);
            FAIL("no error");
        } catch (const ParseError& e) {
            CHECK(e.kind() == ParseError::Kind::Truncated);
            const std::string what = e.what();
            CHECK(what.find(std::to_string(bytes.size())) != std::string::npos);
            CHECK(what.find(std::to_string(cut.size())) != std::string::npos);
        }
    }
    SUBCASE("bad magic") {
        bytes[0] = 'X';
        CHECK(parse_kind([&] { decode_frame_stack(bytes); }) == ParseError::Kind::BadMagic);
    }
    SUBCASE("version mismatch") {
        bytes[8] = 9;
        CHECK(parse_kind([&] { decode_frame_stack(bytes); }) == ParseError::Kind::VersionMismatch);
    }
    SUBCASE("trailing bytes") {
        bytes.push_back(0);
        CHECK(parse_kind([&] { decode_frame_stack(bytes); }) == ParseError::Kind::Length);
    }
    SUBCASE("oversized declaration is refused before allocating") {
        bytes[12] = bytes[13] = bytes[14] = bytes[15] = 0xff;
        CHECK(parse_kind([&] { decode_frame_stack(bytes); }) == ParseError::Kind::TooLarge);
    }
    SUBCASE("empty input") {
        CHECK(parse_kind([&] { decode_frame_stack({}); }) == ParseError::Kind::Truncated);
    }
}

TEST_CASE("text OVF fixture yields the m_z row") {
    const Frame mz = ovf_mz(SWV_TEST_DATA_DIR "/minimal_text.ovf");
    REQUIRE(mz.nx() == 2);
    REQUIRE(mz.ny() == 1);
    CHECK(mz.at(0, 0) == 1.0);
    CHECK(mz.at(1, 0) == -1.0);
    const auto field = read_ovf(SWV_TEST_DATA_DIR "/minimal_text.ovf");
    CHECK(field.grid.dx == 1e-9);
    CHECK(field.grid.thickness == 1e-9);
}

TEST_CASE("binary-4 OVF parsing and z averaging") {
    // Two layers: the field is averaged over z.
    const std::vector<float> values = {0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 1, 0};
    const auto field = decode_ovf(binary_ovf(2, 1, 2, values));
    CHECK(field.at(0, 0) == Vec3{0.0, 0.0, 0.5});
    CHECK(field.at(1, 0) == Vec3{0.5, 0.5, 0.0});
    CHECK(field.grid.dy == 2e-8);
    CHECK(field.grid.thickness == doctest::Approx(1e-8));
}

TEST_CASE("OVF errors are distinct") {
    const std::vector<float> v6 = {0, 0, 1, 0, 0, -1};
    CHECK(parse_kind([&] { decode_ovf(binary_ovf(2, 1, 1, v6, 1234568.0f)); }) == ParseError::Kind::CheckValue);
    auto cut = binary_ovf(2, 1, 1, v6);
    cut.resize(cut.size() - 40);  // drops the trailer and two values
    CHECK(parse_kind([&] { decode_ovf(cut); }) == ParseError::Kind::Truncated);
    CHECK(parse_kind([&] { decode_ovf(binary_ovf(1, 1, 1, v6)); }) == ParseError::Kind::Length);
    CHECK(parse_kind([&] { decode_ovf(bytes_of(ovf_header(3, 1, 1) + "# Begin: Data Text\n0 0 1\n0 0 -1\n# End: Data Text\n")); }) ==
          ParseError::Kind::Length);
    CHECK(parse_kind([&] { decode_ovf(bytes_of(ovf_header(1, 1, 1) + "# Begin: Data Text\n0 0 1 5\n# End: Data Text\n")); }) ==
          ParseError::Kind::Length);
    CHECK(parse_kind([&] { decode_ovf(bytes_of(ovf_header(1, 1, 1) + "# Begin: Data Text\n0 x 1\n# End: Data Text\n")); }) ==
          ParseError::Kind::Malformed);
    CHECK(parse_kind([&] { decode_ovf(bytes_of(ovf_header(1, 1, 1) + "# Begin: Data Binary 8\n")); }) ==
          ParseError::Kind::Unsupported);
    CHECK(parse_kind([&] { decode_ovf(bytes_of(ovf_header(1, 1, 1, 1) + "# Begin: Data Text\n1\n")); }) ==
          ParseError::Kind::Unsupported);
    CHECK(parse_kind([&] { decode_ovf(bytes_of(ovf_header(1, 1, 1, 3, "irregular") + "# Begin: Data Text\n")); }) ==
          ParseError::Kind::Unsupported);
    CHECK(parse_kind([&] { decode_ovf(bytes_of("# OOMMF OVF 1.0\n")); }) == ParseError::Kind::VersionMismatch);
    CHECK(parse_kind([&] { decode_ovf(bytes_of("P6\n1 1\n255\n")); }) == ParseError::Kind::BadMagic);
    CHECK(parse_kind([&] { decode_ovf(bytes_of("# OOMMF OVF 2.0\n# Begin: Header\n# meshtype: rectangular\n# End: Header\n# Begin: Data Text\n")); }) ==
          ParseError::Kind::Malformed);
    CHECK(parse_kind([&] { decode_ovf(bytes_of(ovf_header(1u << 20, 1u << 20, 1))); }) == ParseError::Kind::Truncated);
    CHECK(parse_kind([&] { decode_ovf(bytes_of(ovf_header(1u << 20, 1u << 20, 1) + "# Begin: Data Text\n")); }) ==
          ParseError::Kind::TooLarge);
}

TEST_CASE("WAV 16-bit layout and quantization") {
    AudioClip clip;
    clip.samples = {1.0, -1.0, 0.0, 0.5 / 32767.0, -0.5 / 32767.0, 0.25};
    const auto bytes = encode_wav(clip, WavFormat::Pcm16);
    CHECK(bytes.size() == 44 + 2 * clip.samples.size());
    auto s16 = [&](std::size_t k) { return static_cast<std::int16_t>(bytes[44 + 2 * k] | bytes[45 + 2 * k] << 8); };
    CHECK(s16(0) == 32767);
    CHECK(s16(1) == -32767);
    CHECK(s16(2) == 0);
    CHECK(s16(3) == 1);  // half rounds away from zero
    CHECK(s16(4) == -1);
    CHECK(s16(5) == 8192);  // 8191.75
    WavFormat fmt = WavFormat::Float32;
    const auto back = decode_wav(bytes, &fmt);
    CHECK(fmt == WavFormat::Pcm16);
    CHECK(back.fs == 44100);
    for (std::size_t k = 0; k < clip.samples.size(); ++k) CHECK(std::abs(back.samples[k] - clip.samples[k]) <= 0.5 / 32767.0);
}

TEST_CASE("WAV float32 stereo round trip is bitwise") {
    TempDir dir;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> u(-1.0f, 1.0f);
    AudioClip clip;
    clip.channels = 2;
    clip.fs = 48000;
    for (int k = 0; k < 200; ++k) clip.samples.push_back(u(rng));
    write_wav(clip, dir.path / "a.wav", WavFormat::Float32);
    WavFormat fmt = WavFormat::Pcm16;
    const auto back = read_wav(dir.path / "a.wav", &fmt);
    CHECK(fmt == WavFormat::Float32);
    CHECK(back.channels == 2);
    CHECK(back.fs == 48000);
    CHECK(back.samples == clip.samples);
}

TEST_CASE("WAV reader walks unknown chunks and rejects malformed files") {
    AudioClip clip;
    clip.samples = {0.5, -0.5};
    auto bytes = encode_wav(clip, WavFormat::Pcm16);
    // Insert an odd-sized chunk (padded to even) between fmt and data.
    const std::vector<std::uint8_t> extra = {'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
    bytes.insert(bytes.begin() + 36, extra.begin(), extra.end());
    CHECK(decode_wav(bytes).samples.size() == 2);

    auto bad = encode_wav(clip, WavFormat::Pcm16);
    bad[0] = 'X';
    CHECK(parse_kind([&] { decode_wav(bad); }) == ParseError::Kind::BadMagic);
    auto cut = encode_wav(clip, WavFormat::Pcm16);
    cut.pop_back();
    CHECK(parse_kind([&] { decode_wav(cut); }) == ParseError::Kind::Truncated);
    auto deep = encode_wav(clip, WavFormat::Pcm16);
    deep[34] = 24;
    CHECK(parse_kind([&] { decode_wav(deep); }) == ParseError::Kind::Unsupported);

    AudioClip loud;
    loud.samples = {1.5};
    CHECK_THROWS_AS(encode_wav(loud, WavFormat::Pcm16), InputError);
}

TEST_CASE("PBM mask export packs rows top first") {
    GridSpec g;
    g.nx = 10;
    g.ny = 3;
    ShapeMask m{g, std::vector<std::uint8_t>(30, 0), ShapeKind::Strip, StripParams{}};
    m.inside[g.index(0, 0)] = 1;  // bottom-left
    m.inside[g.index(9, 2)] = 1;  // top-right
    m.inside[g.index(8, 1)] = 1;
    const auto bytes = encode_pbm(m);
    const std::string header = "P4\n10 3\n";
    REQUIRE(bytes.size() == header.size() + 3 * 2);
    CHECK(std::string(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(header.size())) == header);
    const std::vector<std::uint8_t> rows(bytes.begin() + static_cast<std::ptrdiff_t>(header.size()), bytes.end());
    CHECK(rows == std::vector<std::uint8_t>{0x00, 0x40, 0x00, 0x80, 0x80, 0x00});
}

TEST_CASE("PPM round trip and header parsing") {
    Image img(3, 2, Rgb{1, 2, 3});
    img.set(2, 1, Rgb{200, 100, 50});
    const auto bytes = encode_ppm(img);
    CHECK(std::string(bytes.begin(), bytes.begin() + 11) == "P6\n3 2\n255\n");
    CHECK(decode_ppm(bytes) == img);
    auto commented = bytes_of("P6 # comment\n3\t2 255\n");
    commented.insert(commented.end(), img.rgb.begin(), img.rgb.end());
    CHECK(decode_ppm(commented) == img);
    CHECK(parse_kind([&] { decode_ppm(bytes_of("P3\n1 1\n255\n")); }) == ParseError::Kind::BadMagic);
    CHECK(parse_kind([&] { decode_ppm(bytes_of("P6\n1 1\n65535\n")); }) == ParseError::Kind::Unsupported);
    CHECK(parse_kind([&] { decode_ppm(bytes_of("P6\n2 2\n255\nabc")); }) == ParseError::Kind::Truncated);
    CHECK(parse_kind([&] { decode_ppm(bytes_of("P6\n99999 99999\n255\n")); }) == ParseError::Kind::TooLarge);
}

namespace {

SessionManifest sample_session(const fs::path& dir) {
    SessionManifest m;
    m.config = {{"scale", 0.25}};
    for (ShapeKind k : kAllShapes) {
        AudioClip clip;
        clip.samples.assign(1000, 0.0);
        const std::string name = std::string(to_string(k));
        write_wav(pan(clip, default_pan(k)), dir / "audio" / (name + ".wav"));
        fs::create_directories(dir / "frames" / name);
        ShapeRecord r;
        r.kind = k;
        r.audio = "audio/" + name + ".wav";
        r.loop = {100, 100, 900, false};
        r.fundamental_hz = default_fundamental(k);
        r.pan = default_pan(k);
        r.frames_dir = "frames/" + name;
        r.frame_count = 0;
        r.audio_length = 1000;
        m.shapes.push_back(r);
    }
    return m;
}

}  // namespace

TEST_CASE("manifest round trip and validation") {
    TempDir dir;
    const auto m = sample_session(dir.path);
    write_manifest(m, dir.path / "session.json");
    const auto back = validate_manifest(dir.path / "session.json");
    REQUIRE(back.shapes.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
        CHECK(back.shapes[k].pan == pan_positions()[k]);
        CHECK(back.shapes[k].fundamental_hz == pentatonic_defaults()[k]);
        CHECK(back.shapes[k].loop.loop_end == 900);
    }
    CHECK(back.config["scale"] == 0.25);
    CHECK(manifest_to_json(back) == manifest_to_json(m));

    SUBCASE("dangling audio path is named") {
        fs::remove(dir.path / "audio" / "pyramid.wav");
        try {
            validate_manifest(dir.path / "session.json");
            FAIL("no error");
        } catch (const ManifestError& e) {
            CHECK(std::string(e.what()).find("pyramid.wav") != std::string::npos);
        }
    }
    SUBCASE("loop bounds out of range") {
        auto doc = manifest_to_json(m);
        doc["shapes"][1]["loop"]["loop_end"] = 1001;
        CHECK_THROWS_AS(manifest_from_json(doc), ManifestError);
    }
    SUBCASE("missing field") {
        auto doc = manifest_to_json(m);
        doc["shapes"][2].erase("pan");
        try {
            manifest_from_json(doc);
            FAIL("no error");
        } catch (const ManifestError& e) {
            CHECK(std::string(e.what()).find("shapes[2].pan") != std::string::npos);
        }
    }
    SUBCASE("length mismatch with the audio file") {
        auto edited = m;
        edited.shapes[0].audio_length = 999;
        write_manifest(edited, dir.path / "session.json");
        CHECK_THROWS_AS(validate_manifest(dir.path / "session.json"), ManifestError);
    }
    SUBCASE("not JSON") {
        const auto junk = bytes_of("{ nope");
        write_file_bytes(dir.path / "session.json", junk);
        CHECK_THROWS_AS(validate_manifest(dir.path / "session.json"), ManifestError);
    }
}

TEST_CASE("fuzzed inputs only raise library errors") {
    const auto stack = encode_frame_stack(sample_series(3, 2, 2, 9), 1.0);
    fuzz([](std::span<const std::uint8_t> b) { decode_frame_stack(b); }, stack, 1);
    fuzz([](std::span<const std::uint8_t> b) { decode_ovf(b); }, binary_ovf(2, 2, 1, std::vector<float>(12, 0.5f)), 2);
    fuzz([](std::span<const std::uint8_t> b) { decode_ovf(b); },
         bytes_of(ovf_header(2, 1, 1) + "# Begin: Data Text\n0 0 1\n0 0 -1\n# End: Data Text\n"), 3);
    AudioClip clip;
    clip.channels = 2;
    clip.samples = {0.1, -0.2, 0.3, -0.4, 0.5, -0.6};
    fuzz([](std::span<const std::uint8_t> b) { decode_wav(b); }, encode_wav(clip, WavFormat::Pcm16), 4);
    fuzz([](std::span<const std::uint8_t> b) { decode_wav(b); }, encode_wav(clip, WavFormat::Float32), 5);
    fuzz([](std::span<const std::uint8_t> b) { decode_ppm(b); }, encode_ppm(Image(4, 3, Rgb{9, 8, 7})), 6);
    const std::string doc = manifest_to_json(SessionManifest{}).dump();
    fuzz(
        [](std::span<const std::uint8_t> b) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(b.begin(), b.end());
            } catch (const nlohmann::json::exception&) {
                throw ManifestError("not JSON");
            }
            manifest_from_json(j);
        },
        bytes_of(doc), 7);
}
