#include "hdrvqa/views.hpp"

#include <cstring>

namespace hdrvqa {

Tensor frame_to_tensor(const HdrFrame& frame) {
    require(frame.geom.layout == PixelLayout::RGB, ErrorClass::LayoutMismatch,
            "frame_to_tensor: needs RGB layout (convert from YCbCr first)");
    Tensor t(1, 3, frame.geom.height, frame.geom.width);
    for (int c = 0; c < 3; ++c)
        std::memcpy(t.v.data() + size_t(c) * frame.planes[c].size(), frame.planes[c].v.data(),
                    frame.planes[c].size() * sizeof(float));
    return t;
}

Tensor crop_image(const Tensor& img, int x0, int y0, int size) {
    require(img.n == 1, ErrorClass::DimensionMismatch, "crop expects a single image");
    require(x0 >= 0 && y0 >= 0 && x0 + size <= img.w && y0 + size <= img.h,
            ErrorClass::IndexOutOfRange, "crop window outside image");
    Tensor out(1, img.c, size, size);
    for (int c = 0; c < img.c; ++c) {
        const float* src = img.v.data() + size_t(c) * img.h * img.w;
        float* dst = out.v.data() + size_t(c) * size * size;
        for (int y = 0; y < size; ++y)
            std::memcpy(dst + size_t(y) * size, src + size_t(y0 + y) * img.w + x0,
                        size_t(size) * sizeof(float));
    }
    return out;
}

Tensor hflip_image(const Tensor& img) {
    Tensor out = img;
    for (int i = 0; i < img.n; ++i)
        for (int c = 0; c < img.c; ++c) {
            float* p = out.image(i) + size_t(c) * img.h * img.w;
            for (int y = 0; y < img.h; ++y) {
                float* row = p + size_t(y) * img.w;
                for (int x = 0; x < img.w / 2; ++x) std::swap(row[x], row[img.w - 1 - x]);
            }
        }
    return out;
}

Tensor half_scale_image(const Tensor& img, ResampleFilter filter) {
    require(img.n == 1, ErrorClass::DimensionMismatch, "half_scale expects a single image");
    int ow = img.w / 2, oh = img.h / 2;
    require(ow > 0 && oh > 0, ErrorClass::DimensionMismatch, "image too small to halve");
    Tensor out(1, img.c, oh, ow);
    for (int c = 0; c < img.c; ++c) {
        Plane p(img.w, img.h);
        std::memcpy(p.v.data(), img.v.data() + size_t(c) * img.h * img.w,
                    p.v.size() * sizeof(float));
        Plane q = resample_plane(p, ow, oh, filter);
        std::memcpy(out.v.data() + size_t(c) * oh * ow, q.v.data(), q.v.size() * sizeof(float));
    }
    return out;
}

ViewPair build_views(const HdrFrame& rgb_frame, int crop_size, Rng& rng) {
    require(rgb_frame.geom.width >= crop_size && rgb_frame.geom.height >= crop_size,
            ErrorClass::DimensionMismatch, "frame smaller than crop size");
    Tensor img = frame_to_tensor(rgb_frame);
    int max_x = img.w - crop_size, max_y = img.h - crop_size;
    int x0 = max_x > 0 ? int(rng.below(uint64_t(max_x) + 1)) : 0;
    int y0 = max_y > 0 ? int(rng.below(uint64_t(max_y) + 1)) : 0;
    Tensor crop = crop_image(img, x0, y0, crop_size);

    ViewPair vp;
    vp.anchor_flipped = rng.coin();
    vp.positive_flipped = rng.coin();
    vp.anchor = vp.anchor_flipped ? hflip_image(crop) : crop;
    Tensor half = half_scale_image(crop);
    vp.positive = vp.positive_flipped ? hflip_image(half) : std::move(half);
    return vp;
}

Tensor patchify(const Tensor& view, int patch_size) {
    require(view.n == 1, ErrorClass::DimensionMismatch, "patchify expects a single view");
    require(patch_size > 0 && view.h % patch_size == 0 && view.w % patch_size == 0,
            ErrorClass::DimensionMismatch, "view dims not divisible by patch size");
    int py = view.h / patch_size, px = view.w / patch_size;
    Tensor out(py * px, view.c, patch_size, patch_size);
    for (int ty = 0; ty < py; ++ty)
        for (int tx = 0; tx < px; ++tx) {
            float* dst = out.image(ty * px + tx);
            for (int c = 0; c < view.c; ++c) {
                const float* src = view.v.data() + size_t(c) * view.h * view.w;
                for (int y = 0; y < patch_size; ++y)
                    std::memcpy(dst + (size_t(c) * patch_size + y) * patch_size,
                                src + size_t(ty * patch_size + y) * view.w + tx * patch_size,
                                size_t(patch_size) * sizeof(float));
            }
        }
    return out;
}

Tensor unpatchify(const Tensor& patches, int out_h, int out_w) {
    int p = patches.h;
    require(patches.w == p && out_h % p == 0 && out_w % p == 0 &&
                patches.n == (out_h / p) * (out_w / p),
            ErrorClass::DimensionMismatch, "patch grid does not match target dims");
    int px = out_w / p;
    Tensor out(1, patches.c, out_h, out_w);
    for (int i = 0; i < patches.n; ++i) {
        int ty = i / px, tx = i % px;
        const float* src = patches.image(i);
        for (int c = 0; c < patches.c; ++c) {
            float* dst = out.v.data() + size_t(c) * out_h * out_w;
            for (int y = 0; y < p; ++y)
                std::memcpy(dst + size_t(ty * p + y) * out_w + tx * p,
                            src + (size_t(c) * p + y) * p, size_t(p) * sizeof(float));
        }
    }
    return out;
}

}  // namespace hdrvqa
