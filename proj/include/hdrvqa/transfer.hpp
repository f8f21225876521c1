#pragma once

#include "hdrvqa/frame.hpp"

namespace hdrvqa {

// SMPTE ST-2084 (PQ) and BT.2100 HLG transfer functions.
// Scalar math is done in double; plane storage stays float.

// PQ code value in [0,1] -> absolute luminance in nits [0, 10000].
double pq_eotf(double code);

// Absolute luminance in nits [0, 10000] -> PQ code value in [0,1].
double pq_oetf(double nits);

// HLG OETF: normalized scene light [0,1] -> code [0,1].
double hlg_oetf(double scene);

// HLG inverse OETF: code [0,1] -> normalized scene light [0,1].
double hlg_inverse_oetf(double code);

// BT.2100 HLG system gamma for a given nominal peak luminance.
// 1.2 at the 1000-nit reference peak.
double hlg_system_gamma(double peak_nits);

// Re-encode an HLG RGB frame to PQ: inverse OETF, then the HLG OOTF to
// display light at peak_nits, then the PQ OETF per channel.
// Requires layout RGB (the OOTF needs per-pixel scene luminance).
HdrFrame hlg_to_pq(const HdrFrame& frame, double peak_nits = 1000.0);

}  // namespace hdrvqa
