#pragma once

#include "hdrvqa/frame.hpp"
#include "hdrvqa/resample.hpp"
#include "hdrvqa/tensor.hpp"

namespace hdrvqa {

// RGB frame -> [1,3,h,w] tensor and back.
Tensor frame_to_tensor(const HdrFrame& frame);

// Crop a chw image tensor (n=1).
Tensor crop_image(const Tensor& img, int x0, int y0, int size);

// Mirror a chw image tensor horizontally.
Tensor hflip_image(const Tensor& img);

// Downscale a chw image tensor to half size.
Tensor half_scale_image(const Tensor& img, ResampleFilter filter = ResampleFilter::Lanczos3);

struct ViewPair {
    Tensor anchor;    // crop_size
    Tensor positive;  // crop_size / 2
    bool anchor_flipped = false;
    bool positive_flipped = false;
};

// Random crop of the frame plus its half-scale counterpart; each view is
// horizontally flipped on an independent coin flip. The pair shares the
// frame identity (they are each other's positives).
ViewPair build_views(const HdrFrame& rgb_frame, int crop_size, Rng& rng);

// Non-overlapping tiling of a [1,c,h,w] image into [k,c,p,p] patches,
// row-major patch order.
Tensor patchify(const Tensor& view, int patch_size);

// Inverse of patchify, used by tests.
Tensor unpatchify(const Tensor& patches, int out_h, int out_w);

}  // namespace hdrvqa
