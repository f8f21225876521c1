#pragma once

#include "hdrvqa/frame.hpp"

namespace hdrvqa {

// Bilinear co-sited 420 -> 444 chroma upsampling. No-op for 444 input.
HdrFrame upsample_chroma_444(const HdrFrame& frame);

// Y'CbCr -> R'G'B' for Rec.2020 non-constant-luminance content.
// Limited-range code values are expanded to full range before the matrix
// (frame.geom.range selects the interpretation). Output is RGB 444,
// full range, clipped to [0,1]; transfer and primaries tags carry over.
HdrFrame ycbcr_to_rgb(const HdrFrame& frame);

}  // namespace hdrvqa
