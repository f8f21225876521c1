#pragma once

#include <filesystem>
#include <string>

#include "hdrvqa/frame.hpp"

namespace hdrvqa::test {

// unique scratch directory under the build tree, removed on destruction
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("hdrvqa_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline FrameGeometry make_geometry(int w, int h, PixelLayout layout, ChromaSiting chroma,
                                   int bit_depth = 10, double fps = 25.0) {
    FrameGeometry g;
    g.width = w;
    g.height = h;
    g.bit_depth = bit_depth;
    g.layout = layout;
    g.chroma = chroma;
    g.transfer = Transfer::PQ;
    g.primaries = Primaries::Rec2020;
    g.range = layout == PixelLayout::RGB ? Range::Full : Range::Limited;
    g.fps = fps;
    return g;
}

inline HdrFrame random_frame(const FrameGeometry& g, uint64_t seed) {
    HdrFrame f = HdrFrame::make(g);
    Rng rng(seed);
    for (Plane& p : f.planes)
        for (float& v : p.v) v = float(rng.uniform());
    return f;
}

inline HdrFrame constant_frame(const FrameGeometry& g, float value) {
    return HdrFrame::make(g, value);
}

}  // namespace hdrvqa::test
