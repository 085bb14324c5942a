// Volume conditioning: isotropic resampling, intensity clipping, normalization.
#pragma once

#include <algorithm>

#include "mctrace/core.hpp"

namespace mctrace {

constexpr double kDefaultIsotropicSpacingMm = 0.4;
constexpr double kHuClipLow = -1000.0;
constexpr double kHuClipHigh = 3095.0;

// Trilinear sample at fractional voxel coordinates; coordinates outside the
// grid clamp to the nearest border voxel.
inline float sample_trilinear(const ScalarVolume& vol, double fx, double fy, double fz) {
    const auto& d = vol.geom.dims;
    fx = std::clamp(fx, 0.0, static_cast<double>(d[0] - 1));
    fy = std::clamp(fy, 0.0, static_cast<double>(d[1] - 1));
    fz = std::clamp(fz, 0.0, static_cast<double>(d[2] - 1));
    int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy), z0 = static_cast<int>(fz);
    int x1 = std::min(x0 + 1, d[0] - 1);
    int y1 = std::min(y0 + 1, d[1] - 1);
    int z1 = std::min(z0 + 1, d[2] - 1);
    double tx = fx - x0, ty = fy - y0, tz = fz - z0;

    auto v = [&](int x, int y, int z) { return static_cast<double>(vol.at(x, y, z)); };
    double c00 = v(x0, y0, z0) * (1 - tx) + v(x1, y0, z0) * tx;
    double c10 = v(x0, y1, z0) * (1 - tx) + v(x1, y1, z0) * tx;
    double c01 = v(x0, y0, z1) * (1 - tx) + v(x1, y0, z1) * tx;
    double c11 = v(x0, y1, z1) * (1 - tx) + v(x1, y1, z1) * tx;
    double c0 = c00 * (1 - ty) + c10 * ty;
    double c1 = c01 * (1 - ty) + c11 * ty;
    return static_cast<float>(c0 * (1 - tz) + c1 * tz);
}

// Resample to isotropic spacing by trilinear interpolation through world
// coordinates. New dims round half away from zero, minimum 1; origin preserved.
inline ScalarVolume resample_isotropic(const ScalarVolume& vol, double target = kDefaultIsotropicSpacingMm,
                                       int threads = 1) {
    if (!(target > 0.0)) throw std::invalid_argument("resample target spacing must be positive");
    const auto& g = vol.geom;
    GridGeometry out_geom;
    out_geom.spacing = Spacing(target);
    out_geom.origin = g.origin;
    const double src_sp[3] = {g.spacing.sx, g.spacing.sy, g.spacing.sz};
    for (int a = 0; a < 3; ++a) {
        long long n = round_half_away(g.dims[a] * src_sp[a] / target);
        out_geom.dims[a] = static_cast<int>(std::max(1LL, n));
    }
    ScalarVolume out(out_geom);
    parallel_for(out_geom.dims[2], threads, [&](int z) {
        for (int y = 0; y < out_geom.dims[1]; ++y)
            for (int x = 0; x < out_geom.dims[0]; ++x) {
                Vec3 world = out_geom.voxel_to_world(Vec3(x, y, z));
                Vec3 src = g.world_to_voxel(world);
                out.at(x, y, z) = sample_trilinear(vol, src.x, src.y, src.z);
            }
    });
    return out;
}

inline ScalarVolume clip_intensity(const ScalarVolume& vol, double lo = kHuClipLow, double hi = kHuClipHigh) {
    if (!(lo < hi)) throw std::invalid_argument("clip range requires lo < hi");
    ScalarVolume out = vol;
    for (auto& v : out.data) v = static_cast<float>(std::clamp(static_cast<double>(v), lo, hi));
    return out;
}

// Map the fixed HU window [lo, hi] to [0, 1]. Input must already be clipped.
inline ScalarVolume normalize(const ScalarVolume& vol, double lo = kHuClipLow, double hi = kHuClipHigh) {
    if (!(lo < hi)) throw std::invalid_argument("normalize range requires lo < hi");
    ScalarVolume out = vol;
    for (auto& v : out.data) {
        if (v < lo || v > hi)
            throw std::invalid_argument("normalize: value outside [lo, hi]; clip first");
        v = static_cast<float>((v - lo) / (hi - lo));
    }
    return out;
}

}  // namespace mctrace
