#include "hdrvqa/transfer.hpp"

#include <cmath>

namespace hdrvqa {

// ST-2084 constants
namespace {
constexpr double kM1 = 2610.0 / 16384.0;
constexpr double kM2 = 2523.0 / 4096.0 * 128.0;
constexpr double kC1 = 3424.0 / 4096.0;
constexpr double kC2 = 2413.0 / 4096.0 * 32.0;
constexpr double kC3 = 2392.0 / 4096.0 * 32.0;
constexpr double kPqPeak = 10000.0;

// BT.2100 HLG constants
constexpr double kHlgA = 0.17883277;
constexpr double kHlgB = 1.0 - 4.0 * kHlgA;
const double kHlgC = 0.5 - kHlgA * std::log(4.0 * kHlgA);
}  // namespace

double pq_eotf(double code) {
    require(code >= 0.0 && code <= 1.0, ErrorClass::DomainError,
            "pq_eotf: code outside [0,1]");
    if (code == 0.0) return 0.0;
    double xp = std::pow(code, 1.0 / kM2);
    double num = xp - kC1;
    if (num < 0.0) num = 0.0;
    double y = std::pow(num / (kC2 - kC3 * xp), 1.0 / kM1);
    return y * kPqPeak;
}

double pq_oetf(double nits) {
    require(nits >= 0.0 && nits <= kPqPeak, ErrorClass::DomainError,
            "pq_oetf: luminance outside [0,10000]");
    if (nits == 0.0) return 0.0;
    double y = nits / kPqPeak;
    double yp = std::pow(y, kM1);
    return std::pow((kC1 + kC2 * yp) / (1.0 + kC3 * yp), kM2);
}

double hlg_oetf(double scene) {
    require(scene >= 0.0 && scene <= 1.0, ErrorClass::DomainError,
            "hlg_oetf: scene light outside [0,1]");
    if (scene <= 1.0 / 12.0) return std::sqrt(3.0 * scene);
    return kHlgA * std::log(12.0 * scene - kHlgB) + kHlgC;
}

double hlg_inverse_oetf(double code) {
    require(code >= 0.0 && code <= 1.0, ErrorClass::DomainError,
            "hlg_inverse_oetf: code outside [0,1]");
    if (code <= 0.5) return code * code / 3.0;
    return (std::exp((code - kHlgC) / kHlgA) + kHlgB) / 12.0;
}

double hlg_system_gamma(double peak_nits) {
    require(peak_nits > 0.0, ErrorClass::DomainError, "peak luminance must be positive");
    return 1.2 + 0.42 * std::log10(peak_nits / 1000.0);
}

HdrFrame hlg_to_pq(const HdrFrame& frame, double peak_nits) {
    require(frame.geom.transfer == Transfer::HLG, ErrorClass::TransferMismatch,
            "hlg_to_pq: frame transfer is not HLG");
    require(frame.geom.layout == PixelLayout::RGB, ErrorClass::LayoutMismatch,
            "hlg_to_pq: needs RGB layout (OOTF uses per-pixel scene luminance)");
    require(peak_nits > 0.0 && peak_nits <= kPqPeak, ErrorClass::DomainError,
            "hlg_to_pq: peak outside (0,10000]");

    const double gamma = hlg_system_gamma(peak_nits);
    HdrFrame out = frame;
    out.geom.transfer = Transfer::PQ;

    const Plane& r = frame.planes[0];
    const Plane& g = frame.planes[1];
    const Plane& b = frame.planes[2];
    const int64_t n = int64_t(r.size());

#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        double rs = hlg_inverse_oetf(double(r.v[i]));
        double gs = hlg_inverse_oetf(double(g.v[i]));
        double bs = hlg_inverse_oetf(double(b.v[i]));
        // BT.2100 OOTF: display = peak * Ys^(gamma-1) * scene, per channel
        double ys = 0.2627 * rs + 0.6780 * gs + 0.0593 * bs;
        double gain = ys > 0.0 ? peak_nits * std::pow(ys, gamma - 1.0) : 0.0;
        out.planes[0].v[i] = float(pq_oetf(std::min(gain * rs, kPqPeak)));
        out.planes[1].v[i] = float(pq_oetf(std::min(gain * gs, kPqPeak)));
        out.planes[2].v[i] = float(pq_oetf(std::min(gain * bs, kPqPeak)));
    }
    return out;
}

}  // namespace hdrvqa
