// Topology-preserving 3D curve thinning (parallel border peeling with an
// octree simple-point test and Euler-characteristic lookup table). Output is
// a subset of the input with component count preserved; curve endpoints
// (voxels with a single 26-neighbor) are never removed.
#pragma once

#include <array>

#include "mctrace/core.hpp"

namespace mctrace {
namespace thinning {

// Euler characteristic deltas indexed by octant configuration.
inline const std::array<int, 256>& euler_lut() {
    static const std::array<int, 256> lut = [] {
        std::array<int, 256> t{};
        const int vals[128] = {
            1,  -1, -1, 1,  -3, -1, -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
            -3, -1, 3,  1,  1,  -1, 3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
            -3, 3,  -1, 1,  1,  3,  -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
            1,  3,  3,  1,  5,  3,  3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
            -7, -1, -1, 1,  -3, -1, -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
            -3, -1, 3,  1,  1,  -1, 3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
            -3, 3,  -1, 1,  1,  3,  -1, 1,  -1, 1,  1,  -1, 3,  1,  1,  -1,
            1,  3,  3,  1,  5,  3,  3,  1,  -1, 1,  1,  -1, 3,  1,  1,  -1};
        for (int i = 0; i < 128; ++i) t[2 * i + 1] = vals[i];
        return t;
    }();
    return lut;
}

// 3x3x3 neighborhood flattened as n[(z+1)*9 + (y+1)*3 + (x+1)]; n[13] is the
// center voxel.
using Neighborhood = std::array<std::uint8_t, 27>;

inline Neighborhood gather_neighborhood(const BinaryVolume& vol, int x, int y, int z) {
    Neighborhood n{};
    int i = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx, ++i) {
                int nx = x + dx, ny = y + dy, nz = z + dz;
                n[i] = vol.geom.contains(nx, ny, nz) ? vol.at(nx, ny, nz) : 0;
            }
    return n;
}

inline int neighbor_count(const Neighborhood& n) {
    int c = -static_cast<int>(n[13]);
    for (auto v : n) c += v;
    return c;
}

namespace detail {

inline std::uint8_t octant_neb(const Neighborhood& n) {
    std::uint8_t v = 1;
    if (n[2]) v |= 128; if (n[1]) v |= 64; if (n[11]) v |= 32; if (n[10]) v |= 16;
    if (n[5]) v |= 8;  if (n[4]) v |= 4;  if (n[14]) v |= 2;
    return v;
}
inline std::uint8_t octant_nwb(const Neighborhood& n) {
    std::uint8_t v = 1;
    if (n[0]) v |= 128; if (n[9]) v |= 64; if (n[3]) v |= 32; if (n[12]) v |= 16;
    if (n[1]) v |= 8;  if (n[10]) v |= 4; if (n[4]) v |= 2;
    return v;
}
inline std::uint8_t octant_seb(const Neighborhood& n) {
    std::uint8_t v = 1;
    if (n[8]) v |= 128; if (n[7]) v |= 64; if (n[17]) v |= 32; if (n[16]) v |= 16;
    if (n[5]) v |= 8;  if (n[4]) v |= 4;  if (n[14]) v |= 2;
    return v;
}
inline std::uint8_t octant_swb(const Neighborhood& n) {
    std::uint8_t v = 1;
    if (n[6]) v |= 128; if (n[15]) v |= 64; if (n[7]) v |= 32; if (n[16]) v |= 16;
    if (n[3]) v |= 8;  if (n[12]) v |= 4; if (n[4]) v |= 2;
    return v;
}
inline std::uint8_t octant_neu(const Neighborhood& n) {
    std::uint8_t v = 1;
    if (n[20]) v |= 128; if (n[23]) v |= 64; if (n[19]) v |= 32; if (n[22]) v |= 16;
    if (n[11]) v |= 8;  if (n[14]) v |= 4; if (n[10]) v |= 2;
    return v;
}
inline std::uint8_t octant_nwu(const Neighborhood& n) {
    std::uint8_t v = 1;
    if (n[18]) v |= 128; if (n[21]) v |= 64; if (n[9]) v |= 32; if (n[12]) v |= 16;
    if (n[19]) v |= 8;  if (n[22]) v |= 4; if (n[10]) v |= 2;
    return v;
}
inline std::uint8_t octant_seu(const Neighborhood& n) {
    std::uint8_t v = 1;
    if (n[26]) v |= 128; if (n[23]) v |= 64; if (n[17]) v |= 32; if (n[14]) v |= 16;
    if (n[25]) v |= 8;  if (n[22]) v |= 4; if (n[16]) v |= 2;
    return v;
}
inline std::uint8_t octant_swu(const Neighborhood& n) {
    std::uint8_t v = 1;
    if (n[24]) v |= 128; if (n[25]) v |= 64; if (n[15]) v |= 32; if (n[16]) v |= 16;
    if (n[21]) v |= 8;  if (n[22]) v |= 4; if (n[12]) v |= 2;
    return v;
}

// Labels the foreground 26-neighbors reachable within the given octant,
// recursing into octants sharing a face or edge.
inline void octree_label(int octant, int label, std::array<int, 26>& cube) {
    switch (octant) {
        case 1:
            if (cube[0] == 1) cube[0] = label;
            if (cube[1] == 1) { cube[1] = label; octree_label(2, label, cube); }
            if (cube[3] == 1) { cube[3] = label; octree_label(3, label, cube); }
            if (cube[4] == 1) {
                cube[4] = label;
                octree_label(2, label, cube); octree_label(3, label, cube); octree_label(4, label, cube);
            }
            if (cube[9] == 1) { cube[9] = label; octree_label(5, label, cube); }
            if (cube[10] == 1) {
                cube[10] = label;
                octree_label(2, label, cube); octree_label(5, label, cube); octree_label(6, label, cube);
            }
            if (cube[12] == 1) {
                cube[12] = label;
                octree_label(3, label, cube); octree_label(5, label, cube); octree_label(7, label, cube);
            }
            break;
        case 2:
            if (cube[1] == 1) { cube[1] = label; octree_label(1, label, cube); }
            if (cube[4] == 1) {
                cube[4] = label;
                octree_label(1, label, cube); octree_label(3, label, cube); octree_label(4, label, cube);
            }
            if (cube[10] == 1) {
                cube[10] = label;
                octree_label(1, label, cube); octree_label(5, label, cube); octree_label(6, label, cube);
            }
            if (cube[2] == 1) cube[2] = label;
            if (cube[5] == 1) { cube[5] = label; octree_label(4, label, cube); }
            if (cube[11] == 1) { cube[11] = label; octree_label(6, label, cube); }
            if (cube[13] == 1) {
                cube[13] = label;
                octree_label(4, label, cube); octree_label(6, label, cube); octree_label(8, label, cube);
            }
            break;
        case 3:
            if (cube[3] == 1) { cube[3] = label; octree_label(1, label, cube); }
            if (cube[4] == 1) {
                cube[4] = label;
                octree_label(1, label, cube); octree_label(2, label, cube); octree_label(4, label, cube);
            }
            if (cube[12] == 1) {
                cube[12] = label;
                octree_label(1, label, cube); octree_label(5, label, cube); octree_label(7, label, cube);
            }
            if (cube[6] == 1) cube[6] = label;
            if (cube[7] == 1) { cube[7] = label; octree_label(4, label, cube); }
            if (cube[14] == 1) { cube[14] = label; octree_label(7, label, cube); }
            if (cube[15] == 1) {
                cube[15] = label;
                octree_label(4, label, cube); octree_label(7, label, cube); octree_label(8, label, cube);
            }
            break;
        case 4:
            if (cube[4] == 1) {
                cube[4] = label;
                octree_label(1, label, cube); octree_label(2, label, cube); octree_label(3, label, cube);
            }
            if (cube[5] == 1) { cube[5] = label; octree_label(2, label, cube); }
            if (cube[13] == 1) {
                cube[13] = label;
                octree_label(2, label, cube); octree_label(6, label, cube); octree_label(8, label, cube);
            }
            if (cube[7] == 1) { cube[7] = label; octree_label(3, label, cube); }
            if (cube[15] == 1) {
                cube[15] = label;
                octree_label(3, label, cube); octree_label(7, label, cube); octree_label(8, label, cube);
            }
            if (cube[8] == 1) cube[8] = label;
            if (cube[16] == 1) { cube[16] = label; octree_label(8, label, cube); }
            break;
        case 5:
            if (cube[9] == 1) { cube[9] = label; octree_label(1, label, cube); }
            if (cube[10] == 1) {
                cube[10] = label;
                octree_label(1, label, cube); octree_label(2, label, cube); octree_label(6, label, cube);
            }
            if (cube[12] == 1) {
                cube[12] = label;
                octree_label(1, label, cube); octree_label(3, label, cube); octree_label(7, label, cube);
            }
            if (cube[17] == 1) cube[17] = label;
            if (cube[18] == 1) { cube[18] = label; octree_label(6, label, cube); }
            if (cube[20] == 1) { cube[20] = label; octree_label(7, label, cube); }
            if (cube[21] == 1) {
                cube[21] = label;
                octree_label(6, label, cube); octree_label(7, label, cube); octree_label(8, label, cube);
            }
            break;
        case 6:
            if (cube[10] == 1) {
                cube[10] = label;
                octree_label(1, label, cube); octree_label(2, label, cube); octree_label(5, label, cube);
            }
            if (cube[11] == 1) { cube[11] = label; octree_label(2, label, cube); }
            if (cube[13] == 1) {
                cube[13] = label;
                octree_label(2, label, cube); octree_label(4, label, cube); octree_label(8, label, cube);
            }
            if (cube[18] == 1) { cube[18] = label; octree_label(5, label, cube); }
            if (cube[21] == 1) {
                cube[21] = label;
                octree_label(5, label, cube); octree_label(7, label, cube); octree_label(8, label, cube);
            }
            if (cube[19] == 1) cube[19] = label;
            if (cube[22] == 1) { cube[22] = label; octree_label(8, label, cube); }
            break;
        case 7:
            if (cube[12] == 1) {
                cube[12] = label;
                octree_label(1, label, cube); octree_label(3, label, cube); octree_label(5, label, cube);
            }
            if (cube[14] == 1) { cube[14] = label; octree_label(3, label, cube); }
            if (cube[15] == 1) {
                cube[15] = label;
                octree_label(3, label, cube); octree_label(4, label, cube); octree_label(8, label, cube);
            }
            if (cube[20] == 1) { cube[20] = label; octree_label(5, label, cube); }
            if (cube[21] == 1) {
                cube[21] = label;
                octree_label(5, label, cube); octree_label(6, label, cube); octree_label(8, label, cube);
            }
            if (cube[23] == 1) cube[23] = label;
            if (cube[24] == 1) { cube[24] = label; octree_label(8, label, cube); }
            break;
        case 8:
            if (cube[13] == 1) {
                cube[13] = label;
                octree_label(2, label, cube); octree_label(4, label, cube); octree_label(6, label, cube);
            }
            if (cube[15] == 1) {
                cube[15] = label;
                octree_label(3, label, cube); octree_label(4, label, cube); octree_label(7, label, cube);
            }
            if (cube[16] == 1) { cube[16] = label; octree_label(4, label, cube); }
            if (cube[21] == 1) {
                cube[21] = label;
                octree_label(5, label, cube); octree_label(6, label, cube); octree_label(7, label, cube);
            }
            if (cube[22] == 1) { cube[22] = label; octree_label(6, label, cube); }
            if (cube[24] == 1) { cube[24] = label; octree_label(7, label, cube); }
            if (cube[25] == 1) cube[25] = label;
            break;
    }
}

}  // namespace detail

// Deleting the center voxel leaves the Euler characteristic of each octant
// configuration unchanged.
inline bool is_euler_invariant(const Neighborhood& n) {
    const auto& lut = euler_lut();
    int euler = 0;
    euler += lut[detail::octant_swu(n)];
    euler += lut[detail::octant_seu(n)];
    euler += lut[detail::octant_nwu(n)];
    euler += lut[detail::octant_neu(n)];
    euler += lut[detail::octant_swb(n)];
    euler += lut[detail::octant_seb(n)];
    euler += lut[detail::octant_nwb(n)];
    euler += lut[detail::octant_neb(n)];
    return euler == 0;
}

// The foreground 26-neighbors stay 26-connected to each other when the center
// is removed (single connected object in the punctured neighborhood).
inline bool is_simple_point(const Neighborhood& n) {
    std::array<int, 26> cube;
    for (int i = 0; i < 13; ++i) cube[i] = n[i];
    for (int i = 14; i < 27; ++i) cube[i - 1] = n[i];
    static const int start_octant[26] = {1, 1, 2, 1, 1, 2, 3, 3, 4, 1, 1, 2, 1,
                                         2, 3, 3, 4, 5, 5, 6, 5, 5, 6, 7, 7, 8};
    int label = 2;
    for (int i = 0; i < 26; ++i) {
        if (cube[i] != 1) continue;
        detail::octree_label(start_octant[i], label, cube);
        ++label;
        if (label - 2 >= 2) return false;
    }
    return true;
}

}  // namespace thinning

// Thin a binary volume to a curve skeleton. Six directional subiterations per
// pass; a border voxel is deleted only if it is not an endpoint, preserves the
// Euler characteristic, and remains simple at deletion time (sequential
// recheck within each subiteration).
inline BinaryVolume skeletonize(const BinaryVolume& input) {
    using namespace thinning;
    BinaryVolume vol = input;
    std::vector<Index3> fg = vol.foreground();
    if (fg.empty()) return vol;

    // Border direction offsets: N, S, E, W, U, B.
    static const Index3 borders[6] = {{0, -1, 0}, {0, 1, 0}, {1, 0, 0},
                                      {-1, 0, 0}, {0, 0, 1}, {0, 0, -1}};
    std::vector<Index3> candidates;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& b : borders) {
            candidates.clear();
            for (const auto& v : fg) {
                if (!vol.at(v)) continue;
                int nx = v[0] + b[0], ny = v[1] + b[1], nz = v[2] + b[2];
                bool border = !vol.geom.contains(nx, ny, nz) || !vol.at(nx, ny, nz);
                if (!border) continue;
                auto n = gather_neighborhood(vol, v[0], v[1], v[2]);
                if (neighbor_count(n) == 1) continue;  // endpoint
                if (!is_euler_invariant(n)) continue;
                if (!is_simple_point(n)) continue;
                candidates.push_back(v);
            }
            // Parallel marking can invalidate simpleness; recheck sequentially.
            for (const auto& v : candidates) {
                auto n = gather_neighborhood(vol, v[0], v[1], v[2]);
                if (neighbor_count(n) == 1) continue;
                if (is_simple_point(n)) {
                    vol.set(v, 0);
                    changed = true;
                }
            }
        }
        if (changed) {
            std::vector<Index3> next;
            next.reserve(fg.size());
            for (const auto& v : fg)
                if (vol.at(v)) next.push_back(v);
            fg.swap(next);
        }
    }
    return vol;
}

}  // namespace mctrace
