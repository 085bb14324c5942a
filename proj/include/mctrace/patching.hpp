// Sliding-window patch extraction with overlap, OR-merge of patch predictions,
// and the per-patch rotation primitive used for augmentation.
#pragma once

#include <algorithm>

#include "mctrace/core.hpp"
#include "mctrace/volume.hpp"

namespace mctrace {

constexpr int kDefaultPatchSize = 64;
constexpr int kDefaultPatchOverlap = 10;
constexpr double kMaxRotationDeg = 10.0;

template <typename VolumeT>
struct Patch {
    Index3 corner{};
    VolumeT payload;
};

template <typename VolumeT>
struct PatchSet {
    Index3 source_dims{};
    GridGeometry source_geom;
    int size = kDefaultPatchSize;
    int overlap = kDefaultPatchOverlap;
    std::vector<Patch<VolumeT>> patches;
};

// Patch corners per axis: 0, s, 2s, ... with stride s = size - overlap; the
// final corner clamps to dim - size so the window never leaves the volume.
inline std::vector<int> patch_corners(int dim, int size = kDefaultPatchSize,
                                      int overlap = kDefaultPatchOverlap) {
    if (overlap < 0 || overlap >= size)
        throw std::invalid_argument("patch overlap must satisfy 0 <= overlap < size");
    if (dim < size)
        throw std::invalid_argument("volume dim " + std::to_string(dim) +
                                    " smaller than patch size " + std::to_string(size) +
                                    "; pad upstream");
    std::vector<int> corners{0};
    int stride = size - overlap;
    for (int c = stride; c + size < dim; c += stride) corners.push_back(c);
    if (corners.back() != dim - size) corners.push_back(dim - size);
    return corners;
}

template <typename VolumeT>
PatchSet<VolumeT> extract_patches(const VolumeT& vol, int size = kDefaultPatchSize,
                                  int overlap = kDefaultPatchOverlap) {
    PatchSet<VolumeT> out;
    out.source_dims = vol.geom.dims;
    out.source_geom = vol.geom;
    out.size = size;
    out.overlap = overlap;
    auto cx = patch_corners(vol.geom.dims[0], size, overlap);
    auto cy = patch_corners(vol.geom.dims[1], size, overlap);
    auto cz = patch_corners(vol.geom.dims[2], size, overlap);
    for (int z : cz)
        for (int y : cy)
            for (int x : cx) {
                GridGeometry g;
                g.dims = {size, size, size};
                g.spacing = vol.geom.spacing;
                g.origin = vol.geom.voxel_to_world(Vec3(x, y, z));
                VolumeT payload(g);
                for (int pz = 0; pz < size; ++pz)
                    for (int py = 0; py < size; ++py)
                        for (int px = 0; px < size; ++px)
                            payload.at(px, py, pz) = vol.at(x + px, y + py, z + pz);
                out.patches.push_back({Index3{x, y, z}, std::move(payload)});
            }
    return out;
}

enum class PatchClass { Background, Canal };

// A label patch is a canal patch iff it contains any foreground voxel.
inline PatchClass classify_patch(const BinaryVolume& label_patch) {
    for (auto v : label_patch.data)
        if (v) return PatchClass::Canal;
    return PatchClass::Background;
}

// Logical OR of all patches covering each voxel.
inline BinaryVolume merge_patches(const PatchSet<BinaryVolume>& set) {
    GridGeometry g = set.source_geom;
    g.dims = set.source_dims;
    BinaryVolume out(g);
    for (const auto& p : set.patches) {
        if (p.payload.geom.dims != Index3{set.size, set.size, set.size})
            throw std::invalid_argument("patch payload dims inconsistent with patch size");
        for (int a = 0; a < 3; ++a)
            if (p.corner[a] < 0 || p.corner[a] + set.size > set.source_dims[a])
                throw std::invalid_argument("patch corner outside source volume");
        for (int pz = 0; pz < set.size; ++pz)
            for (int py = 0; py < set.size; ++py)
                for (int px = 0; px < set.size; ++px)
                    out.at(p.corner[0] + px, p.corner[1] + py, p.corner[2] + pz) |=
                        p.payload.at(px, py, pz);
    }
    return out;
}

namespace detail {

struct RotatedSampler {
    double cx, cy, cos_a, sin_a;
    // Inverse rotation about the patch center around z.
    void source(int x, int y, double& sx, double& sy) const {
        double dx = x - cx, dy = y - cy;
        sx = cx + cos_a * dx + sin_a * dy;
        sy = cy - sin_a * dx + cos_a * dy;
    }
};

}  // namespace detail

// Rotate an intensity patch about the z (depth) axis with trilinear sampling;
// samples falling outside the patch fill with 0.
inline ScalarVolume rotate_patch(const ScalarVolume& patch, double angle_deg) {
    if (std::abs(angle_deg) > kMaxRotationDeg)
        throw std::invalid_argument("rotation angle outside [-10, 10] degrees");
    const auto& d = patch.geom.dims;
    double rad = angle_deg * std::acos(-1.0) / 180.0;
    detail::RotatedSampler rot{(d[0] - 1) / 2.0, (d[1] - 1) / 2.0, std::cos(rad), std::sin(rad)};
    ScalarVolume out(patch.geom);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                double sx, sy;
                rot.source(x, y, sx, sy);
                if (sx < 0 || sx > d[0] - 1 || sy < 0 || sy > d[1] - 1) continue;
                out.at(x, y, z) = sample_trilinear(patch, sx, sy, z);
            }
    return out;
}

// Label variant: nearest-neighbor sampling keeps values binary.
inline BinaryVolume rotate_patch(const BinaryVolume& patch, double angle_deg) {
    if (std::abs(angle_deg) > kMaxRotationDeg)
        throw std::invalid_argument("rotation angle outside [-10, 10] degrees");
    const auto& d = patch.geom.dims;
    double rad = angle_deg * std::acos(-1.0) / 180.0;
    detail::RotatedSampler rot{(d[0] - 1) / 2.0, (d[1] - 1) / 2.0, std::cos(rad), std::sin(rad)};
    BinaryVolume out(patch.geom);
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                double sx, sy;
                rot.source(x, y, sx, sy);
                int ix = static_cast<int>(round_half_away(sx));
                int iy = static_cast<int>(round_half_away(sy));
                if (ix < 0 || ix >= d[0] || iy < 0 || iy >= d[1]) continue;
                out.at(x, y, z) = patch.at(ix, iy, z);
            }
    return out;
}

}  // namespace mctrace
