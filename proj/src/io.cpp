#include "swv/io.hpp"

#include "swv/errors.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>

namespace swv {

using Kind = ParseError::Kind;

namespace {

// ---- little-endian helpers ----

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>((v >> (8 * b)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>((v >> (8 * b)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint64_t get_u64(const std::uint8_t* p) {
    return static_cast<std::uint64_t>(get_u32(p)) | (static_cast<std::uint64_t>(get_u32(p + 4)) << 32);
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }
double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

void put_tag(std::vector<std::uint8_t>& out, std::string_view tag) { out.insert(out.end(), tag.begin(), tag.end()); }

bool tag_is(const std::uint8_t* p, std::string_view tag) { return std::memcmp(p, tag.data(), tag.size()) == 0; }

}  // namespace

std::vector<std::uint8_t> read_file_bytes(const fs::path& path, std::uint64_t limit) {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec) throw InputError("cannot read " + path.string() + ": " + ec.message());
    if (size > limit) {
        throw ParseError(Kind::TooLarge, path.string() + " is " + std::to_string(size) + " bytes, above the limit");
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
    if (in.gcount() != static_cast<std::streamsize>(size)) throw InputError("short read from " + path.string());
    return bytes;
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for " + path.string());
}

// ---- frame stack ----

std::vector<std::uint8_t> encode_frame_stack(const ScalarFieldSeries& series, double scale) {
    const auto& g = series.grid;
    if (series.frames.empty()) throw InputError("frame stack needs at least one frame");
    if (g.nx == 0 || g.ny == 0 || g.nx > UINT32_MAX || g.ny > UINT32_MAX || series.frames.size() > UINT32_MAX) {
        throw InputError("frame stack dimensions out of range");
    }
    const std::uint64_t payload = 4ull * g.nx * g.ny * series.frames.size();
    if (payload > kMaxDeclaredBytes) throw InputError("frame stack payload exceeds 1 GiB");
    std::vector<std::uint8_t> out;
    out.reserve(kFrameStackHeaderBytes + payload);
    put_tag(out, "SWVSTACK");
    put_u32(out, kFrameStackVersion);
    put_u32(out, static_cast<std::uint32_t>(g.nx));
    put_u32(out, static_cast<std::uint32_t>(g.ny));
    put_u32(out, static_cast<std::uint32_t>(series.frames.size()));
    put_f64(out, series.frame_dt);
    put_f64(out, scale);
    for (const Frame& f : series.frames) {
        if (f.nx() != g.nx || f.ny() != g.ny) throw InputError("frame dimensions differ from the grid");
        for (double v : f.values()) put_f32(out, static_cast<float>(v));
    }
    return out;
}

FrameStack decode_frame_stack(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFrameStackHeaderBytes) {
        throw ParseError(Kind::Truncated, "frame stack header truncated: expected " + std::to_string(kFrameStackHeaderBytes) +
                                              " bytes, got " + std::to_string(bytes.size()));
    }
    const std::uint8_t* p = bytes.data();
    if (!tag_is(p, "SWVSTACK")) throw ParseError(Kind::BadMagic, "not a frame stack (bad magic)");
    const std::uint32_t version = get_u32(p + 8);
    if (version != kFrameStackVersion) {
        throw ParseError(Kind::VersionMismatch, "frame stack version " + std::to_string(version) + " is not supported (expected " +
                                                    std::to_string(kFrameStackVersion) + ")");
    }
    const std::uint64_t nx = get_u32(p + 12);
    const std::uint64_t ny = get_u32(p + 16);
    const std::uint64_t count = get_u32(p + 20);
    const double frame_dt = get_f64(p + 24);
    const double scale = get_f64(p + 32);
    if (nx == 0 || ny == 0 || count == 0) throw ParseError(Kind::Malformed, "frame stack has an empty dimension");
    if (!(std::isfinite(frame_dt) && frame_dt > 0.0)) throw ParseError(Kind::Malformed, "frame stack frame_dt is invalid");
    if (!(std::isfinite(scale) && scale > 0.0)) throw ParseError(Kind::Malformed, "frame stack scale is invalid");
    const std::uint64_t frame_bytes = 4 * nx * ny;  // each factor below 2^32
    if (frame_bytes > kMaxDeclaredBytes || count > kMaxDeclaredBytes / frame_bytes) {
        throw ParseError(Kind::TooLarge, "frame stack declares more than 1 GiB of data");
    }
    const std::uint64_t payload = frame_bytes * count;
    const std::uint64_t expected = kFrameStackHeaderBytes + payload;
    if (bytes.size() < expected) {
        throw ParseError(Kind::Truncated, "frame stack truncated: expected " + std::to_string(expected) + " bytes, got " +
                                              std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) {
        throw ParseError(Kind::Length, "frame stack has " + std::to_string(bytes.size() - expected) + " trailing bytes");
    }
    FrameStack out;
    out.scale = scale;
    out.series.grid.nx = nx;
    out.series.grid.ny = ny;
    out.series.frame_dt = frame_dt;
    out.series.frames.reserve(count);
    const std::uint8_t* q = p + kFrameStackHeaderBytes;
    for (std::uint64_t k = 0; k < count; ++k) {
        std::vector<double> data(nx * ny);
        for (double& v : data) {
            const float f = get_f32(q);
            q += 4;
            if (!std::isfinite(f)) throw ParseError(Kind::Malformed, "frame stack holds a non-finite value");
            v = f;
        }
        out.series.frames.emplace_back(nx, ny, std::move(data));
    }
    return out;
}

void write_frame_stack(const ScalarFieldSeries& series, double scale, const fs::path& path) {
    write_file_bytes(path, encode_frame_stack(series, scale));
}

FrameStack read_frame_stack(const fs::path& path) { return decode_frame_stack(read_file_bytes(path)); }

// ---- OVF ----

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

class LineReader {
public:
    explicit LineReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::optional<std::string_view> next() {
        if (pos_ >= bytes_.size()) return std::nullopt;
        const auto* begin = reinterpret_cast<const char*>(bytes_.data()) + pos_;
        const auto* nl = static_cast<const char*>(std::memchr(begin, '\n', bytes_.size() - pos_));
        const std::size_t len = nl ? static_cast<std::size_t>(nl - begin) : bytes_.size() - pos_;
        pos_ += len + (nl ? 1 : 0);
        std::string_view line(begin, len);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        return line;
    }

    std::size_t pos() const noexcept { return pos_; }
    void skip(std::size_t n) noexcept { pos_ += n; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
    const std::uint8_t* here() const noexcept { return bytes_.data() + pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint64_t header_count(const std::map<std::string, std::string>& h, const std::string& key) {
    const auto it = h.find(key);
    if (it == h.end()) throw ParseError(Kind::Malformed, "OVF header is missing '" + key + "'");
    std::uint64_t v = 0;
    const auto* b = it->second.data();
    const auto [ptr, ec] = std::from_chars(b, b + it->second.size(), v);
    if (ec != std::errc() || ptr != b + it->second.size() || v == 0) {
        throw ParseError(Kind::Malformed, "OVF header field '" + key + "' is not a positive integer");
    }
    return v;
}

double header_real(const std::map<std::string, std::string>& h, const std::string& key, double fallback) {
    const auto it = h.find(key);
    if (it == h.end()) return fallback;
    double v = 0.0;
    const auto* b = it->second.data();
    const auto [ptr, ec] = std::from_chars(b, b + it->second.size(), v);
    if (ec != std::errc() || ptr != b + it->second.size() || !std::isfinite(v) || v <= 0.0) {
        throw ParseError(Kind::Malformed, "OVF header field '" + key + "' is not a positive number");
    }
    return v;
}

}  // namespace

VectorField decode_ovf(std::span<const std::uint8_t> bytes) {
    LineReader lines(bytes);
    const auto first = lines.next();
    if (!first) throw ParseError(Kind::Truncated, "OVF file is empty");
    const std::string magic = lower(trim(*first));
    if (magic.rfind("# oommf ovf", 0) != 0) throw ParseError(Kind::BadMagic, "not an OVF file");
    if (trim(std::string_view(magic).substr(11)) != "2.0") {
        throw ParseError(Kind::VersionMismatch, "only OVF 2.0 is supported, got '" + std::string(trim(*first)) + "'");
    }

    std::map<std::string, std::string> header;
    bool in_header = false;
    std::optional<std::string> data_kind;
    while (auto line = lines.next()) {
        std::string_view l = trim(*line);
        if (l.empty()) continue;
        if (l.front() != '#') throw ParseError(Kind::Malformed, "unexpected text before the data block");
        l = trim(l.substr(1));
        if (l.rfind("##", 0) == 0 || l.empty()) continue;
        const auto colon = l.find(':');
        if (colon == std::string_view::npos) continue;
        const std::string key = lower(trim(l.substr(0, colon)));
        const std::string_view value = trim(l.substr(colon + 1));
        const std::string lvalue = lower(value);
        if (key == "begin" && lvalue == "header") {
            in_header = true;
        } else if (key == "end" && lvalue == "header") {
            in_header = false;
        } else if (key == "begin" && lvalue.rfind("data", 0) == 0) {
            data_kind = lvalue;
            break;
        } else if (in_header) {
            header[key] = std::string(value);
        }
    }
    if (!data_kind) throw ParseError(Kind::Truncated, "OVF file has no data block");

    const auto mesh = header.find("meshtype");
    if (mesh == header.end()) throw ParseError(Kind::Malformed, "OVF header is missing 'meshtype'");
    if (lower(mesh->second) != "rectangular") {
        throw ParseError(Kind::Unsupported, "OVF meshtype '" + mesh->second + "' is not supported (rectangular only)");
    }
    const std::uint64_t valuedim = header_count(header, "valuedim");
    if (valuedim != 3) {
        throw ParseError(Kind::Unsupported, "OVF valuedim " + std::to_string(valuedim) + " is not supported (vector fields only)");
    }
    const std::uint64_t nx = header_count(header, "xnodes");
    const std::uint64_t ny = header_count(header, "ynodes");
    const std::uint64_t nz = header_count(header, "znodes");
    if (nx > kMaxDeclaredBytes || ny > kMaxDeclaredBytes || nz > kMaxDeclaredBytes || nx * ny > kMaxDeclaredBytes ||
        nx * ny * nz * 3 * 4 > kMaxDeclaredBytes) {
        throw ParseError(Kind::TooLarge, "OVF mesh declares more than 1 GiB of data");
    }
    const std::uint64_t nodes = nx * ny * nz;

    GridSpec grid;
    grid.nx = nx;
    grid.ny = ny;
    grid.dx = header_real(header, "xstepsize", 1.0);
    grid.dy = header_real(header, "ystepsize", 1.0);
    grid.thickness = header_real(header, "zstepsize", 1.0) * static_cast<double>(nz);

    std::vector<double> values;
    const std::string kind = *data_kind;
    if (kind == "data text") {
        values.reserve(std::min<std::uint64_t>(3 * nodes, bytes.size()));
        while (auto line = lines.next()) {
            std::string_view l = trim(*line);
            if (l.empty()) continue;
            if (l.front() == '#') {
                if (lower(l).find("end: data") != std::string::npos) break;
                continue;
            }
            while (!l.empty()) {
                const auto space = std::find_if(l.begin(), l.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
                const std::string_view tok = l.substr(0, static_cast<std::size_t>(space - l.begin()));
                double v = 0.0;
                const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
                    throw ParseError(Kind::Malformed, "OVF text data holds a non-numeric token '" + std::string(tok.substr(0, 32)) + "'");
                }
                if (values.size() == 3 * nodes) {
                    throw ParseError(Kind::Length, "OVF data holds more than the " + std::to_string(3 * nodes) + " declared values");
                }
                values.push_back(v);
                l = trim(l.substr(tok.size()));
            }
        }
        if (values.size() != 3 * nodes) {
            throw ParseError(Kind::Length, "OVF data holds " + std::to_string(values.size()) + " values, header declares " +
                                               std::to_string(3 * nodes));
        }
    } else if (kind == "data binary 4") {
        if (lines.remaining() < 4) throw ParseError(Kind::Truncated, "OVF binary block is missing its check value");
        const float check = get_f32(lines.here());
        if (check != 1234567.0f) {
            throw ParseError(Kind::CheckValue, "OVF binary-4 check value is " + std::to_string(check) + ", expected 1234567");
        }
        lines.skip(4);
        const std::uint64_t need = 3 * nodes * 4;
        if (lines.remaining() < need) {
            throw ParseError(Kind::Truncated, "OVF binary block truncated: expected " + std::to_string(need) + " bytes, got " +
                                                  std::to_string(lines.remaining()));
        }
        values.resize(3 * nodes);
        for (std::uint64_t k = 0; k < 3 * nodes; ++k) {
            const float f = get_f32(lines.here() + 4 * k);
            if (!std::isfinite(f)) throw ParseError(Kind::Malformed, "OVF binary data holds a non-finite value");
            values[k] = f;
        }
        lines.skip(need);
        // The block must close right after the declared data.
        std::optional<std::string_view> tail;
        while ((tail = lines.next()) && trim(*tail).empty()) {
        }
        if (!tail || lower(trim(*tail)).find("end: data") == std::string::npos) {
            throw ParseError(Kind::Length, "OVF binary block is longer than the declared mesh");
        }
    } else if (kind == "data binary 8") {
        throw ParseError(Kind::Unsupported, "OVF binary-8 data is not supported; export with binary 4 or text");
    } else {
        throw ParseError(Kind::Unsupported, "OVF data block '" + kind + "' is not supported");
    }

    VectorField field(grid);
    const double inv = 1.0 / static_cast<double>(nz);
    for (std::uint64_t k = 0; k < nz; ++k) {
        for (std::uint64_t j = 0; j < ny; ++j) {
            for (std::uint64_t i = 0; i < nx; ++i) {
                const std::uint64_t n = 3 * ((k * ny + j) * nx + i);
                field.at(i, j) += Vec3{values[n], values[n + 1], values[n + 2]} * inv;
            }
        }
    }
    return field;
}

VectorField read_ovf(const fs::path& path) { return decode_ovf(read_file_bytes(path)); }

Frame ovf_mz(const fs::path& path) { return read_ovf(path).mz(); }

// ---- WAV ----

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, WavFormat format) {
    clip.validate();
    const std::uint16_t bits = format == WavFormat::Pcm16 ? 16 : 32;
    const std::uint16_t block = static_cast<std::uint16_t>(clip.channels * bits / 8);
    const std::uint64_t data_bytes = static_cast<std::uint64_t>(clip.samples.size()) * (bits / 8);
    if (data_bytes > UINT32_MAX - 36) throw InputError("audio clip too long for a WAV file");
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, format == WavFormat::Pcm16 ? 1 : 3);
    put_u16(out, static_cast<std::uint16_t>(clip.channels));
    put_u32(out, static_cast<std::uint32_t>(clip.fs));
    put_u32(out, static_cast<std::uint32_t>(clip.fs) * block);
    put_u16(out, block);
    put_u16(out, bits);
    put_tag(out, "data");
    put_u32(out, static_cast<std::uint32_t>(data_bytes));
    for (double v : clip.samples) {
        if (format == WavFormat::Pcm16) {
            const auto q = static_cast<std::int16_t>(std::round(v * 32767.0));
            put_u16(out, static_cast<std::uint16_t>(q));
        } else {
            put_f32(out, static_cast<float>(v));
        }
    }
    return out;
}

AudioClip decode_wav(std::span<const std::uint8_t> bytes, WavFormat* format) {
    if (bytes.size() < 12) throw ParseError(Kind::Truncated, "WAV header truncated");
    if (!tag_is(bytes.data(), "RIFF") || !tag_is(bytes.data() + 8, "WAVE")) {
        throw ParseError(Kind::BadMagic, "not a RIFF/WAVE file");
    }
    std::size_t pos = 12;
    std::optional<std::uint16_t> tag;
    std::uint16_t channels = 0;
    std::uint32_t fs = 0;
    std::uint16_t block = 0;
    std::uint16_t bits = 0;
    while (pos + 8 <= bytes.size()) {
        const std::uint8_t* chunk = bytes.data() + pos;
        const std::uint64_t size = get_u32(chunk + 4);
        if (size > bytes.size() - pos - 8) {
            throw ParseError(Kind::Truncated, "WAV chunk truncated: declares " + std::to_string(size) + " bytes, " +
                                                  std::to_string(bytes.size() - pos - 8) + " remain");
        }
        const std::uint8_t* body = chunk + 8;
        if (tag_is(chunk, "fmt ")) {
            if (size < 16) throw ParseError(Kind::Malformed, "WAV fmt chunk is too short");
            tag = get_u16(body);
            channels = get_u16(body + 2);
            fs = get_u32(body + 4);
            block = get_u16(body + 12);
            bits = get_u16(body + 14);
        } else if (tag_is(chunk, "data")) {
            if (!tag) throw ParseError(Kind::Malformed, "WAV data chunk precedes the fmt chunk");
            WavFormat f;
            if (*tag == 1 && bits == 16) {
                f = WavFormat::Pcm16;
            } else if (*tag == 3 && bits == 32) {
                f = WavFormat::Float32;
            } else {
                throw ParseError(Kind::Unsupported, "WAV encoding tag " + std::to_string(*tag) + " with " + std::to_string(bits) +
                                                        " bits is not supported");
            }
            if (channels != 1 && channels != 2) throw ParseError(Kind::Unsupported, "WAV channel count must be 1 or 2");
            if (fs == 0 || fs > 1'000'000) throw ParseError(Kind::Malformed, "WAV sample rate is invalid");
            if (block != channels * bits / 8) throw ParseError(Kind::Malformed, "WAV block alignment is inconsistent");
            if (size % block != 0) throw ParseError(Kind::Length, "WAV data is not a whole number of frames");
            AudioClip clip;
            clip.fs = static_cast<int>(fs);
            clip.channels = channels;
            const std::size_t n = static_cast<std::size_t>(size / (bits / 8));
            clip.samples.resize(n);
            for (std::size_t k = 0; k < n; ++k) {
                if (f == WavFormat::Pcm16) {
                    const auto s = static_cast<std::int16_t>(get_u16(body + 2 * k));
                    clip.samples[k] = std::max(-1.0, static_cast<double>(s) / 32767.0);
                } else {
                    const float v = get_f32(body + 4 * k);
                    if (!std::isfinite(v)) throw ParseError(Kind::Malformed, "WAV float data holds a non-finite value");
                    clip.samples[k] = v;
                }
            }
            if (format) *format = f;
            return clip;
        }
        pos += 8 + static_cast<std::size_t>(size) + (size & 1);
    }
    throw ParseError(Kind::Truncated, "WAV file has no data chunk");
}

void write_wav(const AudioClip& clip, const fs::path& path, WavFormat format) {
    write_file_bytes(path, encode_wav(clip, format));
}

AudioClip read_wav(const fs::path& path, WavFormat* format) { return decode_wav(read_file_bytes(path), format); }

// ---- PPM ----

std::vector<std::uint8_t> encode_ppm(const Image& image) {
    if (image.rgb.size() != image.width * image.height * 3) throw InputError("image buffer size mismatch");
    const std::string header = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), image.rgb.begin(), image.rgb.end());
    return out;
}

Image decode_ppm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw ParseError(Kind::BadMagic, "not a binary PPM (P6)");
    std::size_t pos = 2;
    auto next_number = [&]() -> std::uint64_t {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size()) throw ParseError(Kind::Truncated, "PPM header truncated");
        std::uint64_t v = 0;
        std::size_t digits = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            if (++digits > 9) throw ParseError(Kind::Malformed, "PPM header number too long");
            v = v * 10 + (bytes[pos++] - '0');
        }
        if (digits == 0) throw ParseError(Kind::Malformed, "PPM header holds a non-numeric token");
        return v;
    };
    const std::uint64_t w = next_number();
    const std::uint64_t h = next_number();
    const std::uint64_t maxval = next_number();
    if (w == 0 || h == 0) throw ParseError(Kind::Malformed, "PPM has an empty dimension");
    if (maxval != 255) throw ParseError(Kind::Unsupported, "PPM maxval must be 255");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw ParseError(Kind::Malformed, "PPM header is not terminated");
    ++pos;
    if (w * h * 3 > kMaxDeclaredBytes) throw ParseError(Kind::TooLarge, "PPM declares more than 1 GiB of pixels");
    const std::uint64_t need = w * h * 3;
    if (bytes.size() - pos < need) {
        throw ParseError(Kind::Truncated, "PPM pixel data truncated: expected " + std::to_string(need) + " bytes, got " +
                                              std::to_string(bytes.size() - pos));
    }
    if (bytes.size() - pos > need) throw ParseError(Kind::Length, "PPM has trailing bytes");
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return img;
}

void write_ppm(const Image& image, const fs::path& path) { write_file_bytes(path, encode_ppm(image)); }

Image read_ppm(const fs::path& path) { return decode_ppm(read_file_bytes(path)); }

// ---- PBM ----

std::vector<std::uint8_t> encode_pbm(const ShapeMask& mask) {
    const GridSpec& g = mask.grid;
    if (mask.inside.size() != g.cells()) throw InputError("mask size does not match its grid");
    const std::string header = "P4\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    const std::size_t row_bytes = (g.nx + 7) / 8;
    for (std::size_t y = 0; y < g.ny; ++y) {
        const std::size_t j = g.ny - 1 - y;  // top image row is the top grid row
        std::vector<std::uint8_t> row(row_bytes, 0);
        for (std::size_t i = 0; i < g.nx; ++i)
            if (mask.at(i, j)) row[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
        out.insert(out.end(), row.begin(), row.end());
    }
    return out;
}

void write_pbm(const ShapeMask& mask, const fs::path& path) { write_file_bytes(path, encode_pbm(mask)); }

// ---- manifest ----

std::string frame_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05zu.ppm", index);
    return buf;
}

nlohmann::json manifest_to_json(const SessionManifest& manifest) {
    nlohmann::json doc;
    doc["format"] = kManifestFormat;
    doc["version"] = kManifestVersion;
    doc["sample_rate"] = manifest.sample_rate;
    doc["config"] = manifest.config;
    doc["shapes"] = nlohmann::json::array();
    for (const ShapeRecord& r : manifest.shapes) {
        doc["shapes"].push_back({
            {"kind", std::string(to_string(r.kind))},
            {"audio", r.audio},
            {"loop",
             {{"transient_end", r.loop.transient_end},
              {"loop_start", r.loop.loop_start},
              {"loop_end", r.loop.loop_end},
              {"fallback", r.loop.fallback}}},
            {"fundamental_hz", r.fundamental_hz},
            {"pan", r.pan},
            {"frames_dir", r.frames_dir},
            {"display_fps", r.display_fps},
            {"frame_count", r.frame_count},
            {"audio_length", r.audio_length},
        });
    }
    return doc;
}

namespace {

const nlohmann::json& field(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw ManifestError("manifest is missing field '" + where + key + "'");
    return obj.at(key);
}

template <typename T>
T typed(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    const auto& v = field(obj, key, where);
    try {
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ManifestError("");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ManifestError("");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) throw ManifestError("");
        } else {
            if (!v.is_number()) throw ManifestError("");
        }
        return v.get<T>();
    } catch (const std::exception&) {
        throw ManifestError("manifest field '" + where + key + "' has the wrong type");
    }
}

}  // namespace

SessionManifest manifest_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ManifestError("manifest is not a JSON object");
    if (typed<std::string>(doc, "format", "") != kManifestFormat) throw ManifestError("manifest format is not " + std::string(kManifestFormat));
    if (typed<int>(doc, "version", "") != kManifestVersion) throw ManifestError("manifest version is not supported");
    SessionManifest m;
    m.sample_rate = typed<int>(doc, "sample_rate", "");
    if (m.sample_rate <= 0) throw ManifestError("manifest sample_rate must be positive");
    m.config = field(doc, "config", "");
    const auto& shapes = field(doc, "shapes", "");
    if (!shapes.is_array()) throw ManifestError("manifest field 'shapes' must be an array");
    for (std::size_t k = 0; k < shapes.size(); ++k) {
        const auto& s = shapes[k];
        const std::string where = "shapes[" + std::to_string(k) + "].";
        ShapeRecord r;
        const auto kind = parse_shape_kind(typed<std::string>(s, "kind", where));
        if (!kind) throw ManifestError("manifest field '" + where + "kind' names an unknown shape");
        r.kind = *kind;
        r.audio = typed<std::string>(s, "audio", where);
        const auto& loop = field(s, "loop", where);
        r.loop.transient_end = typed<std::size_t>(loop, "transient_end", where + "loop.");
        r.loop.loop_start = typed<std::size_t>(loop, "loop_start", where + "loop.");
        r.loop.loop_end = typed<std::size_t>(loop, "loop_end", where + "loop.");
        r.loop.fallback = typed<bool>(loop, "fallback", where + "loop.");
        r.fundamental_hz = typed<double>(s, "fundamental_hz", where);
        r.pan = typed<double>(s, "pan", where);
        r.frames_dir = typed<std::string>(s, "frames_dir", where);
        r.display_fps = typed<double>(s, "display_fps", where);
        r.frame_count = typed<std::size_t>(s, "frame_count", where);
        r.audio_length = typed<std::size_t>(s, "audio_length", where);
        if (!(r.fundamental_hz > 0.0)) throw ManifestError("manifest field '" + where + "fundamental_hz' must be positive");
        if (!(r.pan >= 0.0 && r.pan <= 1.0)) throw ManifestError("manifest field '" + where + "pan' must lie in [0, 1]");
        if (!(r.display_fps > 0.0)) throw ManifestError("manifest field '" + where + "display_fps' must be positive");
        if (!(r.loop.transient_end <= r.loop.loop_start && r.loop.loop_start < r.loop.loop_end &&
              r.loop.loop_end <= r.audio_length)) {
            throw ManifestError("manifest loop points of " + where.substr(0, where.size() - 1) + " are out of range");
        }
        m.shapes.push_back(std::move(r));
    }
    return m;
}

void write_manifest(const SessionManifest& manifest, const fs::path& path) {
    const std::string text = manifest_to_json(manifest).dump(2) + "\n";
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

SessionManifest validate_manifest(const fs::path& path) {
    const auto bytes = read_file_bytes(path, 64u << 20);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw ManifestError("manifest " + path.string() + " is not valid JSON: " + e.what());
    }
    SessionManifest m = manifest_from_json(doc);
    const fs::path base = path.parent_path();
    for (const ShapeRecord& r : m.shapes) {
        const fs::path audio = base / r.audio;
        if (!fs::is_regular_file(audio)) throw ManifestError("manifest references a missing audio file: " + audio.string());
        const fs::path frames = base / r.frames_dir;
        if (!fs::is_directory(frames)) throw ManifestError("manifest references a missing frame directory: " + frames.string());
        AudioClip clip;
        try {
            clip = read_wav(audio);
        } catch (const Error& e) {
            throw ManifestError("manifest audio file " + audio.string() + " is unreadable: " + e.what());
        }
        if (clip.fs != m.sample_rate) throw ManifestError("sample rate of " + audio.string() + " differs from the manifest");
        if (clip.frames() != r.audio_length) {
            throw ManifestError("length of " + audio.string() + " is " + std::to_string(clip.frames()) + " samples, manifest says " +
                                std::to_string(r.audio_length));
        }
    }
    return m;
}

}  // namespace swv
