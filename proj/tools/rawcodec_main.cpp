// Toy bitrate-targeted codec for headerless raw planar video. Quantizes
// samples down to the bit budget implied by the target bitrate, bit-packs
// them, and pads the container to the target size so achieved bitrate
// matches the request. Stands in for a production encoder (x265 via ffmpeg)
// behind the same templated command contract.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hdrvqa/raw_io.hpp"

namespace fs = std::filesystem;
using namespace hdrvqa;

namespace {

constexpr char kMagic[8] = {'H', 'V', 'Q', 'A', 'R', 'A', 'W', 'C'};
constexpr uint32_t kVersion = 1;

struct BitWriter {
    std::vector<uint8_t> bytes;
    uint64_t acc = 0;
    int nbits = 0;
    void put(uint32_t v, int bits) {
        acc = (acc << bits) | (v & ((1u << bits) - 1));
        nbits += bits;
        while (nbits >= 8) {
            bytes.push_back(uint8_t(acc >> (nbits - 8)));
            nbits -= 8;
        }
    }
    void flush() {
        if (nbits > 0) {
            bytes.push_back(uint8_t(acc << (8 - nbits)));
            nbits = 0;
        }
    }
};

struct BitReader {
    const uint8_t* p;
    size_t n;
    size_t pos = 0;
    uint64_t acc = 0;
    int nbits = 0;
    uint32_t get(int bits) {
        while (nbits < bits) {
            acc = (acc << 8) | (pos < n ? p[pos++] : 0);
            nbits += 8;
        }
        uint32_t v = uint32_t((acc >> (nbits - bits)) & ((1ull << bits) - 1));
        nbits -= bits;
        return v;
    }
};

std::vector<uint16_t> read_samples(const std::string& path, const FrameGeometry& g,
                                   int64_t frames) {
    std::ifstream in(path, std::ios::binary);
    size_t total = size_t(frames) * g.samples_per_frame();
    std::vector<uint16_t> out(total);
    if (g.bytes_per_sample() == 2) {
        in.read(reinterpret_cast<char*>(out.data()), std::streamsize(total * 2));
    } else {
        std::vector<uint8_t> buf(total);
        in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(total));
        for (size_t i = 0; i < total; ++i) out[i] = buf[i];
    }
    require(in.good(), ErrorClass::DecodeFail, "short read from " + path);
    return out;
}

void write_samples(const std::string& path, const FrameGeometry& g,
                   const std::vector<uint16_t>& samples) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (g.bytes_per_sample() == 2) {
        out.write(reinterpret_cast<const char*>(samples.data()),
                  std::streamsize(samples.size() * 2));
    } else {
        std::vector<uint8_t> buf(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) buf[i] = uint8_t(samples[i]);
        out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
    }
    require(out.good(), ErrorClass::Internal, "write failed: " + path);
}

int do_encode(const std::string& input, const std::string& output, double bitrate_kbps,
              int expect_w, int expect_h) {
    FrameGeometry g = load_geometry(default_sidecar_path(input));
    if (expect_w > 0)
        require(g.width == expect_w && g.height == expect_h, ErrorClass::GeometryMismatch,
                "contract resolution does not match input sidecar");
    int64_t frames = raw_frame_count(input, g);
    double duration = double(frames) / g.fps;
    std::vector<uint16_t> samples = read_samples(input, g, frames);

    nlohmann::ordered_json hj;
    hj["width"] = g.width;
    hj["height"] = g.height;
    hj["bit_depth"] = g.bit_depth;
    hj["layout"] = to_string(g.layout);
    hj["chroma"] = to_string(g.chroma);
    hj["transfer"] = to_string(g.transfer);
    hj["primaries"] = to_string(g.primaries);
    hj["range"] = to_string(g.range);
    hj["fps"] = g.fps;
    hj["frames"] = frames;

    uint64_t target_bytes = uint64_t(std::llround(bitrate_kbps * 1000.0 * duration / 8.0));
    std::string header_probe = hj.dump();
    uint64_t overhead = sizeof(kMagic) + sizeof(kVersion) + 8 + header_probe.size() + 16 + 1;
    uint64_t budget_bits = target_bytes > overhead ? (target_bytes - overhead) * 8 : 0;
    int qbits = int(budget_bits / std::max<uint64_t>(samples.size(), 1));
    qbits = std::clamp(qbits, 1, g.bit_depth);
    hj["qbits"] = qbits;
    std::string header = hj.dump();

    const uint32_t maxin = (1u << g.bit_depth) - 1;
    const uint32_t maxq = (1u << qbits) - 1;
    BitWriter bw;
    for (uint16_t s : samples) {
        uint32_t q = uint32_t(std::lround(double(std::min<uint32_t>(s, maxin)) * maxq / maxin));
        bw.put(q, qbits);
    }
    bw.flush();

    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    out.write(kMagic, sizeof(kMagic));
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
    uint64_t hlen = header.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(header.data(), std::streamsize(header.size()));
    out.write(reinterpret_cast<const char*>(bw.bytes.data()), std::streamsize(bw.bytes.size()));
    // pad the container up to the rate-control target
    uint64_t written = sizeof(kMagic) + sizeof(kVersion) + sizeof(hlen) + header.size() +
                       bw.bytes.size();
    if (written < target_bytes) {
        std::vector<char> pad(size_t(target_bytes - written), 0);
        out.write(pad.data(), std::streamsize(pad.size()));
    }
    require(out.good(), ErrorClass::Internal, "write failed: " + output);
    return 0;
}

struct Decoded {
    FrameGeometry geom;
    int64_t frames = 0;
    int qbits = 0;
    std::vector<uint16_t> samples;
};

Decoded read_encoded(const std::string& input) {
    std::ifstream in(input, std::ios::binary);
    require(in.good(), ErrorClass::FileNotFound, "no such file: " + input);
    char magic[8];
    in.read(magic, 8);
    require(in.good() && std::memcmp(magic, kMagic, 8) == 0, ErrorClass::DecodeFail,
            "not a rawcodec stream: " + input);
    uint32_t version;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    require(version == kVersion, ErrorClass::SchemaVersion, "unsupported stream version");
    uint64_t hlen;
    in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string header(hlen, '\0');
    in.read(header.data(), std::streamsize(hlen));
    require(in.good(), ErrorClass::DecodeFail, "truncated stream header");
    nlohmann::json hj = nlohmann::json::parse(header);

    Decoded d;
    d.geom.width = hj.at("width").get<int>();
    d.geom.height = hj.at("height").get<int>();
    d.geom.bit_depth = hj.at("bit_depth").get<int>();
    d.geom.layout = layout_from_string(hj.at("layout").get<std::string>());
    d.geom.chroma = chroma_from_string(hj.at("chroma").get<std::string>());
    d.geom.transfer = transfer_from_string(hj.at("transfer").get<std::string>());
    d.geom.primaries = primaries_from_string(hj.at("primaries").get<std::string>());
    d.geom.range = range_from_string(hj.at("range").get<std::string>());
    d.geom.fps = hj.at("fps").get<double>();
    d.frames = hj.at("frames").get<int64_t>();
    d.qbits = hj.at("qbits").get<int>();

    size_t total = size_t(d.frames) * d.geom.samples_per_frame();
    size_t packed = (total * size_t(d.qbits) + 7) / 8;
    std::vector<uint8_t> buf(packed);
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(packed));
    require(in.good(), ErrorClass::DecodeFail, "truncated stream payload");

    const uint32_t maxin = (1u << d.geom.bit_depth) - 1;
    const uint32_t maxq = (1u << d.qbits) - 1;
    BitReader br{buf.data(), buf.size()};
    d.samples.resize(total);
    for (size_t i = 0; i < total; ++i) {
        uint32_t q = br.get(d.qbits);
        d.samples[i] = uint16_t(std::lround(double(q) * maxin / maxq));
    }
    return d;
}

int do_decode(const std::string& input, const std::string& output) {
    Decoded d = read_encoded(input);
    write_samples(output, d.geom, d.samples);
    save_geometry(default_sidecar_path(output), d.geom);
    return 0;
}

int do_probe(const std::string& input) {
    Decoded d = read_encoded(input);
    double duration = double(d.frames) / d.geom.fps;
    double kbps = double(fs::file_size(input)) * 8.0 / duration / 1000.0;
    std::cout << "bitrate_kbps=" << kbps << "\n";
    std::cout << "width=" << d.geom.width << "\n";
    std::cout << "height=" << d.geom.height << "\n";
    std::cout << "frames=" << d.frames << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bitrate-targeted toy codec for raw planar video"};
    app.require_subcommand(1);

    std::string input, output;
    double bitrate_kbps = 0;
    int width = 0, height = 0;

    CLI::App* enc = app.add_subcommand("encode", "quantize + pack to a bitrate target");
    enc->add_option("--input", input)->required();
    enc->add_option("--output", output)->required();
    enc->add_option("--bitrate-kbps", bitrate_kbps)->required();
    enc->add_option("--width", width);
    enc->add_option("--height", height);

    CLI::App* dec = app.add_subcommand("decode", "unpack back to raw video");
    dec->add_option("--input", input)->required();
    dec->add_option("--output", output)->required();

    CLI::App* probe = app.add_subcommand("probe", "print stream properties");
    probe->add_option("--input", input)->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (enc->parsed()) return do_encode(input, output, bitrate_kbps, width, height);
        if (dec->parsed()) return do_decode(input, output);
        if (probe->parsed()) return do_probe(input);
    } catch (const Error& e) {
        std::cerr << "error: " << error_class_name(e.cls()) << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: INTERNAL: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
