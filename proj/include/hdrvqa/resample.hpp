#pragma once

#include "hdrvqa/frame.hpp"

namespace hdrvqa {

enum class ResampleFilter { Lanczos3, Bilinear, Nearest };

const char* to_string(ResampleFilter f);
ResampleFilter filter_from_string(std::string_view s);

// Separable resize with edge clamping; the kernel footprint is widened by the
// scale factor when downscaling. Output is clipped to [0,1].
Plane resample_plane(const Plane& src, int out_w, int out_h, ResampleFilter filter);

// Resize a frame to target dims, chroma planes follow the siting. Metadata is
// preserved; identical target dims return a bit-identical copy.
HdrFrame rescale(const HdrFrame& frame, int width, int height,
                 ResampleFilter filter = ResampleFilter::Lanczos3);

}  // namespace hdrvqa
