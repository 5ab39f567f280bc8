#pragma once

#include "swv/core_field.hpp"
#include "swv/render.hpp"
#include "swv/shapes.hpp"
#include "swv/sonify.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace swv {

namespace fs = std::filesystem;

// Upper bound on any size a parser will allocate from header-declared fields.
inline constexpr std::uint64_t kMaxDeclaredBytes = std::uint64_t{1} << 30;

std::vector<std::uint8_t> read_file_bytes(const fs::path& path, std::uint64_t limit = kMaxDeclaredBytes + 4096);
void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes);

// ---- frame stack ----------------------------------------------------------------------------
// 40-byte little-endian header ("SWVSTACK", u32 version, u32 nx, ny, frame_count, f64 frame_dt,
// f64 scale) followed by frame_count * ny * nx f32 values, row-major.

inline constexpr std::uint32_t kFrameStackVersion = 1;
inline constexpr std::size_t kFrameStackHeaderBytes = 40;

struct FrameStack {
    ScalarFieldSeries series;
    double scale = 1.0;  // normalization factor that was applied to the data
};

std::vector<std::uint8_t> encode_frame_stack(const ScalarFieldSeries& series, double scale);
FrameStack decode_frame_stack(std::span<const std::uint8_t> bytes);
void write_frame_stack(const ScalarFieldSeries& series, double scale, const fs::path& path);
FrameStack read_frame_stack(const fs::path& path);

// ---- OVF 2.0 --------------------------------------------------------------------------------
// Rectangular meshes, valuedim 3, text or binary-4 data. Layers are averaged over z.

VectorField decode_ovf(std::span<const std::uint8_t> bytes);
VectorField read_ovf(const fs::path& path);
Frame ovf_mz(const fs::path& path);

// ---- WAV ------------------------------------------------------------------------------------

enum class WavFormat { Pcm16, Float32 };

// Canonical 44-byte RIFF header. PCM16 stores round-half-away-from-zero of 32767 * v.
std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavFormat format);
AudioClip decode_wav(std::span<const std::uint8_t> bytes, WavFormat* format = nullptr);
void write_wav(const AudioClip& clip, const fs::path& path, WavFormat format = WavFormat::Pcm16);
AudioClip read_wav(const fs::path& path, WavFormat* format = nullptr);

// ---- PPM ------------------------------------------------------------------------------------

std::vector<std::uint8_t> encode_ppm(const Image& image);
Image decode_ppm(std::span<const std::uint8_t> bytes);
void write_ppm(const Image& image, const fs::path& path);
Image read_ppm(const fs::path& path);

// ---- PBM ------------------------------------------------------------------------------------

// Binary P4, 1 = material; the top image row is grid row ny-1.
std::vector<std::uint8_t> encode_pbm(const ShapeMask& mask);
void write_pbm(const ShapeMask& mask, const fs::path& path);

// ---- session manifest -----------------------------------------------------------------------

inline constexpr const char* kManifestFormat = "spinwave-voices-session";
inline constexpr int kManifestVersion = 1;

// Paths are relative to the manifest's directory.
struct ShapeRecord {
    ShapeKind kind = ShapeKind::Strip;
    std::string audio;       // WAV file
    LoopSpec loop;
    double fundamental_hz = 0.0;
    double pan = 0.5;
    std::string frames_dir;  // directory of frame_NNNNN.ppm files
    double display_fps = 10.0;
    std::size_t frame_count = 0;
    std::size_t audio_length = 0;  // samples per channel
};

struct SessionManifest {
    int sample_rate = 44100;
    nlohmann::json config = nlohmann::json::object();  // settings the session was produced with
    std::vector<ShapeRecord> shapes;
};

nlohmann::json manifest_to_json(const SessionManifest& manifest);
// Schema check only. Throws ManifestError naming the offending field.
SessionManifest manifest_from_json(const nlohmann::json& doc);
void write_manifest(const SessionManifest& manifest, const fs::path& path);
// Schema, file existence, audio lengths and loop bounds. Throws ManifestError.
SessionManifest validate_manifest(const fs::path& path);

std::string frame_file_name(std::size_t index);  // frame_00042.ppm

}  // namespace swv
