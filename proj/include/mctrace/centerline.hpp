// Centerline and tube ground truth from control points: parametric line
// rasterization and fixed-diameter tube generation.
#pragma once

#include <algorithm>

#include "mctrace/core.hpp"
#include "mctrace/imageio.hpp"

namespace mctrace {

constexpr double kDefaultLineStep = 0.01;
constexpr double kDefaultTubeDiameterMm = 3.0;

enum class Frame { WorldMm, Voxel };

struct Polyline {
    std::vector<Vec3> points;
    Frame frame = Frame::WorldMm;
    GridGeometry geom;  // meaningful when frame == Voxel

    void validate() const {
        if (points.empty()) throw std::invalid_argument("polyline needs at least 1 point");
    }
};

// Map mm control points into fractional voxel coordinates on the target grid.
inline Polyline scale_to_grid(const ControlPointSet& cps, const GridGeometry& geom) {
    geom.validate();
    Polyline out;
    out.frame = Frame::Voxel;
    out.geom = geom;
    for (const auto& p : cps.points) {
        Vec3 v = geom.world_to_voxel(p);
        for (int a = 0; a < 3; ++a) {
            double c = a == 0 ? v.x : a == 1 ? v.y : v.z;
            if (c < -1.0 || c > geom.dims[a] - 1 + 1.0)
                throw std::out_of_range("control point (" + std::to_string(p.x) + ", " +
                                        std::to_string(p.y) + ", " + std::to_string(p.z) +
                                        ") mm maps more than 1 voxel outside the volume");
        }
        out.points.push_back(v);
    }
    return out;
}

// Parametric line rasterization: between consecutive points, sample
// p1 + (p2 - p1) * t * k for k = 0..ceil(1/t) (parameter clamped to 1) and
// round each sample to its nearest voxel.
inline BinaryVolume rasterize_centerline(const Polyline& poly, double step = kDefaultLineStep) {
    poly.validate();
    if (poly.frame != Frame::Voxel)
        throw std::invalid_argument("rasterize_centerline expects a voxel-frame polyline");
    if (!(step > 0.0 && step <= 1.0))
        throw std::invalid_argument("step must be in (0, 1]");
    BinaryVolume out(poly.geom);
    auto mark = [&](const Vec3& p) {
        Index3 v = round_voxel(p);
        if (!out.geom.contains(v))
            throw std::out_of_range("centerline sample rounds outside the volume");
        out.set(v, 1);
    };
    if (poly.points.size() == 1) {
        mark(poly.points[0]);
        return out;
    }
    long long kmax = static_cast<long long>(std::ceil(1.0 / step));
    for (std::size_t i = 0; i + 1 < poly.points.size(); ++i) {
        const Vec3& p1 = poly.points[i];
        const Vec3& p2 = poly.points[i + 1];
        for (long long k = 0; k <= kmax; ++k) {
            double t = std::min(1.0, step * k);
            mark(p1 + (p2 - p1) * t);
        }
    }
    return out;
}

namespace detail {

// Densely resample a world-mm point chain at the given arc step.
inline std::vector<Vec3> densify(const std::vector<Vec3>& pts, double arc_step) {
    std::vector<Vec3> out;
    if (pts.empty()) return out;
    out.push_back(pts[0]);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double len = distance(pts[i], pts[i + 1]);
        int n = std::max(1, static_cast<int>(std::ceil(len / arc_step)));
        for (int k = 1; k <= n; ++k)
            out.push_back(pts[i] + (pts[i + 1] - pts[i]) * (static_cast<double>(k) / n));
    }
    return out;
}

}  // namespace detail

// Voxel set within diameter/2 (inclusive) of the densely resampled centerline,
// distances taken in world mm between voxel centers and curve samples.
inline BinaryVolume tube_from_samples(const std::vector<Vec3>& samples_mm,
                                      const GridGeometry& geom,
                                      double diameter_mm = kDefaultTubeDiameterMm,
                                      int threads = 1) {
    if (!(diameter_mm > 0.0)) throw std::invalid_argument("tube diameter must be positive");
    if (samples_mm.empty()) throw std::invalid_argument("tube from empty centerline");
    geom.validate();
    double radius = diameter_mm / 2.0;
    int rx = static_cast<int>(std::ceil(radius / geom.spacing.sx)) + 1;
    int ry = static_cast<int>(std::ceil(radius / geom.spacing.sy)) + 1;
    int rz = static_cast<int>(std::ceil(radius / geom.spacing.sz)) + 1;

    // Bucket samples by z-slab so slice-parallel marking stays deterministic:
    // each thread writes only its own z slices.
    BinaryVolume out(geom);
    parallel_for(geom.dims[2], threads, [&](int z) {
        for (const auto& s : samples_mm) {
            Vec3 sv = geom.world_to_voxel(s);
            int cz = static_cast<int>(round_half_away(sv.z));
            if (z < cz - rz || z > cz + rz) continue;
            int x0 = std::max(0, static_cast<int>(round_half_away(sv.x)) - rx);
            int x1 = std::min(geom.dims[0] - 1, static_cast<int>(round_half_away(sv.x)) + rx);
            int y0 = std::max(0, static_cast<int>(round_half_away(sv.y)) - ry);
            int y1 = std::min(geom.dims[1] - 1, static_cast<int>(round_half_away(sv.y)) + ry);
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (out.at(x, y, z)) continue;
                    Vec3 c = geom.voxel_to_world(Vec3(x, y, z));
                    if (distance(c, s) <= radius) out.at(x, y, z) = 1;
                }
        }
    });
    return out;
}

inline BinaryVolume tube_from_centerline(const Polyline& poly, const GridGeometry& geom,
                                         double diameter_mm = kDefaultTubeDiameterMm,
                                         int threads = 1) {
    poly.validate();
    std::vector<Vec3> pts_mm;
    pts_mm.reserve(poly.points.size());
    for (const auto& p : poly.points)
        pts_mm.push_back(poly.frame == Frame::WorldMm ? p : poly.geom.voxel_to_world(p));
    double min_sp = std::min({geom.spacing.sx, geom.spacing.sy, geom.spacing.sz});
    auto dense = detail::densify(pts_mm, 0.1 * min_sp);
    return tube_from_samples(dense, geom, diameter_mm, threads);
}

// Tube around an existing centerline voxel set; samples are the voxel centers.
inline BinaryVolume tube_from_centerline(const BinaryVolume& centerline,
                                         double diameter_mm = kDefaultTubeDiameterMm,
                                         int threads = 1) {
    std::vector<Vec3> samples;
    for (const auto& v : centerline.foreground())
        samples.push_back(centerline.geom.voxel_to_world(to_vec3(v)));
    return tube_from_samples(samples, centerline.geom, diameter_mm, threads);
}

}  // namespace mctrace
