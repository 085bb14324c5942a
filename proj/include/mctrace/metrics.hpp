// Evaluation: voxel-overlap metrics (precision, recall, F1, IoU, mean IoU)
// and bidirectional mean curve distance in millimeters.
#pragma once

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "mctrace/centerline.hpp"
#include "mctrace/core.hpp"
#include "mctrace/imageio.hpp"

namespace mctrace {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline ConfusionCounts confusion(const BinaryVolume& pred, const BinaryVolume& gt) {
    if (pred.geom.dims != gt.geom.dims)
        throw std::invalid_argument("confusion: volume dims differ");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        if (pred.data[i] && gt.data[i]) ++c.tp;
        else if (pred.data[i]) ++c.fp;
        else if (gt.data[i]) ++c.fn;
        else ++c.tn;
    }
    return c;
}

// A ratio together with whether its 0 came from a 0/0 case.
struct MetricValue {
    double value = 0.0;
    bool defined = true;
};

inline MetricValue ratio_of(std::size_t num, std::size_t den) {
    if (den == 0) return {0.0, false};
    return {static_cast<double>(num) / static_cast<double>(den), true};
}

inline MetricValue precision(const ConfusionCounts& c) { return ratio_of(c.tp, c.tp + c.fp); }
inline MetricValue recall(const ConfusionCounts& c) { return ratio_of(c.tp, c.tp + c.fn); }

inline MetricValue f1_score(const ConfusionCounts& c) {
    double den = c.tp + 0.5 * (c.fp + c.fn);
    if (den == 0.0) return {0.0, false};
    return {c.tp / den, true};
}

inline MetricValue iou(const ConfusionCounts& c) { return ratio_of(c.tp, c.tp + c.fp + c.fn); }

// Average of canal IoU and background IoU (background computed on the
// inverted volumes, i.e. tn / (tn + fp + fn)).
inline MetricValue mean_iou(const BinaryVolume& pred, const BinaryVolume& gt) {
    auto c = confusion(pred, gt);
    auto canal = iou(c);
    auto background = ratio_of(c.tn, c.tn + c.fp + c.fn);
    return {(canal.value + background.value) / 2.0, canal.defined && background.defined};
}

namespace detail {

// Uniform spatial hash for nearest-point queries; brute force stays the oracle.
class PointGrid {
 public:
    explicit PointGrid(const std::vector<Vec3>& points) : points_(points) {
        if (points.empty()) throw std::invalid_argument("empty point set");
        Vec3 lo = points[0], hi = points[0];
        for (const auto& p : points) {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        lo_ = lo;
        double extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z, 1e-9});
        double cells = std::cbrt(static_cast<double>(points.size()));
        cell_ = std::max(1e-9, extent / std::max(1.0, cells));
        cmin_ = cell_of(lo);
        cmax_ = cell_of(hi);
        for (std::size_t i = 0; i < points.size(); ++i)
            buckets_[key(points[i])].push_back(i);
    }

    double nearest_distance(const Vec3& q) const {
        auto [cx, cy, cz] = cell_of(q);
        double best = std::numeric_limits<double>::infinity();
        // Expanding chebyshev shells, restricted to the occupied cell bounding
        // box. The first shell that can touch the box is the chebyshev cell
        // distance to it; the last useful shell reaches its far corner. Once a
        // candidate is found, shells up to ceil(best/cell)+1 still have to be
        // inspected before it is provably the nearest.
        auto axis_gap = [](int c, int lo, int hi) {
            return c < lo ? lo - c : c > hi ? c - hi : 0;
        };
        auto axis_far = [](int c, int lo, int hi) { return std::max(hi - c, c - lo); };
        int first_ring = std::max({axis_gap(cx, cmin_[0], cmax_[0]),
                                   axis_gap(cy, cmin_[1], cmax_[1]),
                                   axis_gap(cz, cmin_[2], cmax_[2])});
        int box_ring = std::max({axis_far(cx, cmin_[0], cmax_[0]),
                                 axis_far(cy, cmin_[1], cmax_[1]),
                                 axis_far(cz, cmin_[2], cmax_[2])});
        long long last_ring = box_ring;
        for (long long ring = first_ring; ring <= last_ring; ++ring) {
            int z0 = std::max<long long>(-ring, cmin_[2] - cz);
            int z1 = std::min<long long>(ring, cmax_[2] - cz);
            int y0 = std::max<long long>(-ring, cmin_[1] - cy);
            int y1 = std::min<long long>(ring, cmax_[1] - cy);
            int x0 = std::max<long long>(-ring, cmin_[0] - cx);
            int x1 = std::min<long long>(ring, cmax_[0] - cx);
            for (int dz = z0; dz <= z1; ++dz)
                for (int dy = y0; dy <= y1; ++dy)
                    for (int dx = x0; dx <= x1; ++dx) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
                        auto it = buckets_.find(pack(cx + dx, cy + dy, cz + dz));
                        if (it == buckets_.end()) continue;
                        for (auto i : it->second) best = std::min(best, distance(q, points_[i]));
                    }
            if (best < std::numeric_limits<double>::infinity())
                last_ring = std::min(last_ring,
                                     static_cast<long long>(std::ceil(best / cell_)) + 1);
        }
        return best;
    }

 private:
    std::array<int, 3> cell_of(const Vec3& p) const {
        return {static_cast<int>(std::floor((p.x - lo_.x) / cell_)),
                static_cast<int>(std::floor((p.y - lo_.y) / cell_)),
                static_cast<int>(std::floor((p.z - lo_.z) / cell_))};
    }
    std::int64_t pack(int x, int y, int z) const {
        return (static_cast<std::int64_t>(x) & 0x1FFFFF) |
               ((static_cast<std::int64_t>(y) & 0x1FFFFF) << 21) |
               ((static_cast<std::int64_t>(z) & 0x1FFFFF) << 42);
    }
    std::int64_t key(const Vec3& p) const {
        auto c = cell_of(p);
        return pack(c[0], c[1], c[2]);
    }

    const std::vector<Vec3>& points_;
    Vec3 lo_;
    std::array<int, 3> cmin_{}, cmax_{};
    double cell_ = 1.0;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace detail

// Mean over source points of the Euclidean distance (mm) to the nearest
// target point. Directional: mcd(A, B) != mcd(B, A) in general.
inline double mcd(const std::vector<Vec3>& from_mm, const std::vector<Vec3>& to_mm) {
    if (from_mm.empty() || to_mm.empty())
        throw std::invalid_argument("mcd: empty curve");
    detail::PointGrid grid(to_mm);
    double sum = 0.0;
    for (const auto& p : from_mm) sum += grid.nearest_distance(p);
    return sum / static_cast<double>(from_mm.size());
}

inline std::vector<Vec3> curve_points_mm(const BinaryVolume& curve) {
    std::vector<Vec3> pts;
    for (const auto& v : curve.foreground())
        pts.push_back(curve.geom.voxel_to_world(to_vec3(v)));
    return pts;
}

inline double mcd(const BinaryVolume& from_curve, const BinaryVolume& to_curve) {
    return mcd(curve_points_mm(from_curve), curve_points_mm(to_curve));
}

// Full evaluation: MCD both directions on the centerlines, overlap metrics on
// fixed-diameter tubes built around both curves.
inline MetricReport evaluate(const BinaryVolume& pred_centerline, const BinaryVolume& gt_centerline,
                             double tube_diameter_mm = kDefaultTubeDiameterMm, int threads = 1) {
    MetricReport report;
    bool pred_empty = pred_centerline.count() == 0;
    bool gt_empty = gt_centerline.count() == 0;
    if (!pred_empty && !gt_empty) {
        report.mcd_gp_mm = mcd(gt_centerline, pred_centerline);
        report.mcd_pg_mm = mcd(pred_centerline, gt_centerline);
    } else {
        report.mcd_gp_mm = 0.0;
        report.mcd_pg_mm = 0.0;
        report.undefined.push_back("mcd_gp_mm");
        report.undefined.push_back("mcd_pg_mm");
    }

    BinaryVolume pred_tube = pred_empty ? BinaryVolume(pred_centerline.geom)
                                        : tube_from_centerline(pred_centerline, tube_diameter_mm,
                                                               threads);
    BinaryVolume gt_tube = gt_empty ? BinaryVolume(gt_centerline.geom)
                                    : tube_from_centerline(gt_centerline, tube_diameter_mm,
                                                           threads);
    auto c = confusion(pred_tube, gt_tube);
    auto set = [&](std::optional<double>& field, const char* key, MetricValue v) {
        field = v.value;
        if (!v.defined) report.undefined.push_back(key);
    };
    set(report.precision, "precision", precision(c));
    set(report.recall, "recall", recall(c));
    set(report.f1, "f1", f1_score(c));
    set(report.iou_canal, "iou_canal", iou(c));
    set(report.iou_background, "iou_background", ratio_of(c.tn, c.tn + c.fp + c.fn));
    set(report.miou, "miou", mean_iou(pred_tube, gt_tube));
    return report;
}

}  // namespace mctrace
