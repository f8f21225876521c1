#include "hdrvqa/raw_io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace hdrvqa {

namespace fs = std::filesystem;

int64_t raw_frame_count(const std::string& path, const FrameGeometry& geom) {
    geom.validate();
    require(fs::exists(path), ErrorClass::FileNotFound, "no such file: " + path);
    uint64_t size = fs::file_size(path);
    uint64_t stride = geom.bytes_per_frame();
    require(size % stride == 0, ErrorClass::GeometryMismatch,
            "file size " + std::to_string(size) + " not divisible by frame stride " +
                std::to_string(stride) + " (wrong geometry?): " + path);
    return int64_t(size / stride);
}

static void read_plane(std::ifstream& in, Plane& plane, int bit_depth) {
    const float scale = 1.0f / float((1 << bit_depth) - 1);
    size_t n = plane.size();
    if (bit_depth > 8) {
        std::vector<uint16_t> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n * 2));
        require(in.good(), ErrorClass::DecodeFail, "short read on raw plane");
        for (size_t i = 0; i < n; ++i) plane.v[i] = float(buf[i]) * scale;
    } else {
        std::vector<uint8_t> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(n));
        require(in.good(), ErrorClass::DecodeFail, "short read on raw plane");
        for (size_t i = 0; i < n; ++i) plane.v[i] = float(buf[i]) * scale;
    }
}

std::vector<HdrFrame> load_frames(const std::string& path, const FrameGeometry& geom,
                                  const std::vector<int64_t>& frame_indices) {
    int64_t count = raw_frame_count(path, geom);
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorClass::FileNotFound, "cannot open: " + path);

    std::vector<HdrFrame> out;
    out.reserve(frame_indices.size());
    for (int64_t idx : frame_indices) {
        require(idx >= 0 && idx < count, ErrorClass::IndexOutOfRange,
                "frame index " + std::to_string(idx) + " out of range [0," +
                    std::to_string(count) + ") in " + path);
        in.seekg(std::streamoff(uint64_t(idx) * geom.bytes_per_frame()));
        HdrFrame f = HdrFrame::make(geom);
        for (Plane& p : f.planes) read_plane(in, p, geom.bit_depth);
        // values normalized by 2^bit_depth - 1, so [0,1] holds by construction
        out.push_back(std::move(f));
    }
    return out;
}

HdrFrame load_frame(const std::string& path, const FrameGeometry& geom, int64_t index) {
    return std::move(load_frames(path, geom, {index})[0]);
}

static void write_plane(std::ofstream& out, const Plane& plane, int bit_depth) {
    const float maxv = float((1 << bit_depth) - 1);
    size_t n = plane.size();
    if (bit_depth > 8) {
        std::vector<uint16_t> buf(n);
        for (size_t i = 0; i < n; ++i) {
            float v = std::min(std::max(plane.v[i], 0.f), 1.f);
            buf[i] = uint16_t(std::lround(v * maxv));
        }
        out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(n * 2));
    } else {
        std::vector<uint8_t> buf(n);
        for (size_t i = 0; i < n; ++i) {
            float v = std::min(std::max(plane.v[i], 0.f), 1.f);
            buf[i] = uint8_t(std::lround(v * maxv));
        }
        out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(n));
    }
}

void save_frames(const std::string& path, const std::vector<HdrFrame>& frames, bool append) {
    auto mode = std::ios::binary | (append ? std::ios::app : std::ios::trunc);
    std::ofstream out(path, mode);
    require(out.good(), ErrorClass::FileNotFound, "cannot open for write: " + path);
    for (const HdrFrame& f : frames) {
        f.geom.validate();
        for (const Plane& p : f.planes) write_plane(out, p, f.geom.bit_depth);
    }
    require(out.good(), ErrorClass::Internal, "write failed: " + path);
}

static constexpr int kSidecarSchema = 1;

FrameGeometry load_geometry(const std::string& sidecar_path) {
    std::ifstream in(sidecar_path);
    require(in.good(), ErrorClass::FileNotFound, "no such sidecar: " + sidecar_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorClass::ConfigInvalid, "bad sidecar json: " + std::string(e.what()));
    }
    require(j.value("schema", 0) == kSidecarSchema, ErrorClass::SchemaVersion,
            "unsupported sidecar schema in " + sidecar_path);
    FrameGeometry g;
    g.width = j.at("width").get<int>();
    g.height = j.at("height").get<int>();
    g.bit_depth = j.at("bit_depth").get<int>();
    g.layout = layout_from_string(j.at("layout").get<std::string>());
    g.chroma = chroma_from_string(j.at("chroma").get<std::string>());
    g.transfer = transfer_from_string(j.at("transfer").get<std::string>());
    g.primaries = primaries_from_string(j.at("primaries").get<std::string>());
    g.range = range_from_string(j.value("range", "limited"));
    g.fps = j.value("fps", 25.0);
    g.validate();
    return g;
}

void save_geometry(const std::string& sidecar_path, const FrameGeometry& geom) {
    geom.validate();
    nlohmann::ordered_json j;
    j["schema"] = kSidecarSchema;
    j["width"] = geom.width;
    j["height"] = geom.height;
    j["bit_depth"] = geom.bit_depth;
    j["layout"] = to_string(geom.layout);
    j["chroma"] = to_string(geom.chroma);
    j["transfer"] = to_string(geom.transfer);
    j["primaries"] = to_string(geom.primaries);
    j["range"] = to_string(geom.range);
    j["fps"] = geom.fps;
    std::ofstream out(sidecar_path);
    require(out.good(), ErrorClass::FileNotFound, "cannot write sidecar: " + sidecar_path);
    out << j.dump(2) << "\n";
}

std::string default_sidecar_path(const std::string& raw_path) {
    return raw_path + ".json";
}

}  // namespace hdrvqa
