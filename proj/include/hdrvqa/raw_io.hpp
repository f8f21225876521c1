#pragma once

#include <string>
#include <vector>

#include "hdrvqa/frame.hpp"

namespace hdrvqa {

// Raw planar video: samples stored per plane, frames back to back.
// bit_depth > 8 uses little-endian 16-bit containers, otherwise single bytes.

int64_t raw_frame_count(const std::string& path, const FrameGeometry& geom);

std::vector<HdrFrame> load_frames(const std::string& path, const FrameGeometry& geom,
                                  const std::vector<int64_t>& frame_indices);

HdrFrame load_frame(const std::string& path, const FrameGeometry& geom, int64_t index);

void save_frames(const std::string& path, const std::vector<HdrFrame>& frames,
                 bool append = false);

FrameGeometry load_geometry(const std::string& sidecar_path);
void save_geometry(const std::string& sidecar_path, const FrameGeometry& geom);

// <path>.json next to the raw file, unless an explicit sidecar is given.
std::string default_sidecar_path(const std::string& raw_path);

}  // namespace hdrvqa
