// Seeded synthetic phantoms: analytic canal-like curves, their tubes, and
// corrupted predictions exhibiting thickening, spurs, breaks, parallel
// clutter, and small-component noise.
#pragma once

#include <algorithm>

#include "mctrace/centerline.hpp"
#include "mctrace/core.hpp"
#include "mctrace/metrics.hpp"
#include "mctrace/postprocess.hpp"
#include "mctrace/volume.hpp"

namespace mctrace {

// splitmix64; the output is fully determined by the published constants.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }
};

// Independent per-artifact stream derived from (seed, index).
inline SplitMix64 rng_stream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 r{seed ^ (0x9E3779B97F4A7C15ULL * (index + 1))};
    r.next();
    return r;
}

enum class CurveFamily { Straight, CircularArc, HelicalArc };

struct PhantomConfig {
    std::uint64_t seed = 1;
    Index3 dims{128, 128, 128};
    double spacing_mm = kDefaultIsotropicSpacingMm;
    CurveFamily family = CurveFamily::HelicalArc;
    double tube_diameter_mm = kDefaultTubeDiameterMm;

    // Corruption toggles (zero disables) and magnitudes.
    int thicken_radius = 1;          // voxels of dilation
    int spur_count = 2;
    int spur_length = 8;             // voxels
    int break_count = 1;
    double break_gap_mm = 1.6;       // slab thickness erased across the tube
    int clutter_count = 1;
    double clutter_offset_mm = 4.0;  // lateral offset of the parallel copy
    double clutter_length_mm = 5.0;
    double clutter_diameter_mm = 1.2;
    int noise_count = 5;
    int noise_radius = 1;            // voxels; blob stays below the step-1 threshold
};

struct Phantom {
    PhantomConfig cfg;
    GridGeometry geom;
    std::vector<Vec3> control_points_mm;  // sparse, ~1 mm apart
    std::vector<Vec3> axis_mm;            // dense analytic samples, 0.2 mm arc step
    BinaryVolume centerline;
    BinaryVolume tube;
};

namespace detail {

inline Vec3 random_unit(SplitMix64& rng) {
    while (true) {
        Vec3 v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        double n = v.norm();
        if (n > 1e-3 && n <= 1.0) return v / n;
    }
}

inline Vec3 perpendicular_unit(const Vec3& t, SplitMix64& rng) {
    while (true) {
        Vec3 p = t.cross(random_unit(rng));
        if (p.norm() > 1e-3) return p.normalized();
    }
}

}  // namespace detail

// Analytic open curve fully inside the volume with >= 2 mm wall clearance and
// >= 20 mm arc length. Returned sample spacing is the requested arc step.
inline std::vector<Vec3> generate_curve(const PhantomConfig& cfg, double arc_step_mm = 0.2) {
    GridGeometry geom;
    geom.dims = cfg.dims;
    geom.spacing = Spacing(cfg.spacing_mm);
    geom.validate();
    Vec3 extent{(cfg.dims[0] - 1) * cfg.spacing_mm, (cfg.dims[1] - 1) * cfg.spacing_mm,
                (cfg.dims[2] - 1) * cfg.spacing_mm};
    Vec3 center = extent * 0.5;
    double min_extent = std::min({extent.x, extent.y, extent.z});
    double margin = 2.0 + cfg.tube_diameter_mm / 2.0;
    SplitMix64 rng = rng_stream(cfg.seed, 0);

    std::vector<Vec3> pts;
    // f maps the curve parameter to a point; arc_length converts the desired
    // mm step into a parameter subdivision count.
    auto emit = [&](auto&& f, double s_begin, double s_end, double arc_length) {
        int n = std::max(2, static_cast<int>(std::ceil(arc_length / arc_step_mm)));
        for (int k = 0; k <= n; ++k)
            pts.push_back(f(s_begin + (s_end - s_begin) * k / n));
    };

    switch (cfg.family) {
        case CurveFamily::Straight: {
            Vec3 dir = detail::random_unit(rng);
            double half = 0.5 * std::max(20.0, 0.75 * min_extent);
            emit([&](double s) { return center + dir * s; }, -half, half, 2.0 * half);
            break;
        }
        case CurveFamily::CircularArc:
        case CurveFamily::HelicalArc: {
            double radius = rng.uniform(12.0, std::min(16.0, min_extent / 2.0 - margin - 1.0));
            double span = rng.uniform(2.6, 3.0);  // radians; arc length >= 31 mm at radius >= 12
            double phase = rng.uniform(0.0, 6.28318530717958648);
            double tilt = rng.uniform(-0.25, 0.25);
            double pitch = cfg.family == CurveFamily::HelicalArc ? rng.uniform(4.0, 8.0) : 0.0;
            // Constant parametric speed: sqrt(radius^2 + (pitch/span)^2) mm
            // of arc per radian.
            double speed = std::sqrt(radius * radius + (pitch / span) * (pitch / span));
            emit(
                [&](double a) {
                    Vec3 p{radius * std::cos(phase + a), radius * std::sin(phase + a),
                           pitch * (a / span)};
                    // Tilt about x to take the curve out of a pure axial plane.
                    Vec3 q{p.x, p.y * std::cos(tilt) - p.z * std::sin(tilt),
                           p.y * std::sin(tilt) + p.z * std::cos(tilt)};
                    return center + q;
                },
                -span / 2.0, span / 2.0, span * speed);
            break;
        }
    }

    for (const auto& p : pts)
        if (p.x < margin || p.y < margin || p.z < margin || p.x > extent.x - margin ||
            p.y > extent.y - margin || p.z > extent.z - margin)
            throw std::logic_error("phantom curve violates wall clearance; shrink the curve family");
    return pts;
}

inline Phantom make_phantom(const PhantomConfig& cfg, int threads = 1) {
    Phantom ph;
    ph.cfg = cfg;
    ph.geom.dims = cfg.dims;
    ph.geom.spacing = Spacing(cfg.spacing_mm);
    ph.geom.validate();
    ph.axis_mm = generate_curve(cfg, 0.2);
    ph.control_points_mm = generate_curve(cfg, 1.0);

    ControlPointSet cps;
    cps.points = ph.control_points_mm;
    ph.centerline = rasterize_centerline(scale_to_grid(cps, ph.geom));
    ph.tube = tube_from_samples(ph.axis_mm, ph.geom, cfg.tube_diameter_mm, threads);
    return ph;
}

struct ArtifactRecord {
    std::string kind;  // spur, clutter, noise, break, thicken
    Vec3 center_mm{};
    std::size_t voxels_changed = 0;
};

struct CorruptionManifest {
    std::vector<ArtifactRecord> artifacts;
};

namespace detail {

inline std::size_t ball_voxel_count(int r) {
    std::size_t n = 0;
    for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
                if (dx * dx + dy * dy + dz * dz <= r * r) ++n;
    return n;
}

inline std::size_t stamp_ball(BinaryVolume& vol, const Index3& c, int r, std::uint8_t value) {
    std::size_t changed = 0;
    for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy + dz * dz > r * r) continue;
                Index3 v{c[0] + dx, c[1] + dy, c[2] + dz};
                if (!vol.geom.contains(v) || vol.at(v) == value) continue;
                vol.set(v, value);
                ++changed;
            }
    return changed;
}

inline BinaryVolume dilate(const BinaryVolume& vol, int r) {
    BinaryVolume out = vol;
    for (const auto& v : vol.foreground()) stamp_ball(out, v, r, 1);
    return out;
}

inline double min_distance_to(const std::vector<Vec3>& pts, const Vec3& q) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::min(best, distance(p, q));
    return best;
}

}  // namespace detail

// Apply the configured corruptions to the ground-truth tube. The canal is
// thickened first, spurs, clutter, and noise are added on top, and breaks are
// cut last so they actually split the tube.
inline BinaryVolume corrupt(const Phantom& ph, CorruptionManifest* manifest = nullptr) {
    const PhantomConfig& cfg = ph.cfg;
    if (cfg.thicken_radius < 0 || cfg.spur_count < 0 || cfg.break_count < 0 ||
        cfg.clutter_count < 0 || cfg.noise_count < 0 || cfg.spur_length < 0 ||
        cfg.break_gap_mm < 0 || cfg.noise_radius < 0)
        throw std::invalid_argument("corruption magnitudes must be non-negative");
    if (cfg.noise_count > 0 &&
        detail::ball_voxel_count(cfg.noise_radius + cfg.thicken_radius) >=
            static_cast<std::size_t>(kDefaultMinComponentSize))
        throw std::invalid_argument("noise blobs would reach the small-component threshold");

    BinaryVolume vol = ph.tube;
    const GridGeometry& geom = ph.geom;
    auto record = [&](const std::string& kind, const Vec3& c, std::size_t n) {
        if (manifest) manifest->artifacts.push_back({kind, c, n});
    };

    // Slight thickening of the canal itself. This runs before the other
    // artifacts so clutter and noise stay separate components instead of
    // being dilated into the tube.
    if (cfg.thicken_radius > 0) {
        std::size_t before = vol.count();
        vol = detail::dilate(vol, cfg.thicken_radius);
        record("thicken", Vec3{}, vol.count() - before);
    }

    // Unnecessary branches: jittered chains walking away from the axis,
    // attached in the middle band so the furthest-terminal rule still prefers
    // the true endpoints.
    for (int i = 0; i < cfg.spur_count; ++i) {
        SplitMix64 rng = rng_stream(cfg.seed, 100 + i);
        // Attach away from both the curve ends and the break band so the
        // spur tip can never geodesically outrun the true endpoints.
        double u = rng.uniform(0.15, 0.22);
        if (rng.next() & 1) u = 1.0 - u;
        std::size_t ai = static_cast<std::size_t>(u * (ph.axis_mm.size() - 1));
        const Vec3& attach = ph.axis_mm[ai];
        Vec3 tangent = (ph.axis_mm[std::min(ai + 1, ph.axis_mm.size() - 1)] -
                        ph.axis_mm[ai > 0 ? ai - 1 : 0]);
        Vec3 dir = detail::perpendicular_unit(tangent.norm() > 1e-9 ? tangent.normalized()
                                                                    : Vec3{0, 0, 1}, rng);
        Vec3 pos = geom.world_to_voxel(attach);
        std::size_t changed = 0;
        // Sub-voxel steps (<= 0.9 per axis) keep consecutive rounded voxels
        // 26-adjacent, so the spur stays attached to the tube.
        int steps = static_cast<int>(std::ceil(cfg.spur_length / 0.7));
        for (int k = 0; k < steps; ++k) {
            pos = pos + dir * 0.7 + Vec3{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                                         rng.uniform(-0.2, 0.2)};
            Index3 v = round_voxel(pos);
            if (!geom.contains(v)) break;
            if (!vol.at(v)) {
                vol.set(v, 1);
                ++changed;
            }
        }
        record("spur", attach, changed);
    }

    // Parallel clutter: a laterally offset partial copy of the axis.
    for (int i = 0; i < cfg.clutter_count; ++i) {
        SplitMix64 rng = rng_stream(cfg.seed, 200 + i);
        double arc_step = 0.2;
        std::size_t window = static_cast<std::size_t>(cfg.clutter_length_mm / arc_step);
        std::size_t lo = ph.axis_mm.size() / 4;
        std::size_t hi = 3 * ph.axis_mm.size() / 4;
        // For short curves the window may exceed the middle band; clamp the
        // start range so indexing stays inside the axis.
        long long slack = static_cast<long long>(hi) - static_cast<long long>(lo) -
                          static_cast<long long>(window);
        std::size_t start = lo + rng.next() % static_cast<std::uint64_t>(std::max(1LL, slack));
        std::size_t end = std::min(start + window, ph.axis_mm.size() - 1);
        Vec3 tangent = (ph.axis_mm[end] - ph.axis_mm[start]).normalized();
        Vec3 offset = detail::perpendicular_unit(tangent, rng) * cfg.clutter_offset_mm;
        std::vector<Vec3> samples;
        for (std::size_t k = start; k <= end; ++k) samples.push_back(ph.axis_mm[k] + offset);
        BinaryVolume clutter = tube_from_samples(samples, geom, cfg.clutter_diameter_mm);
        // Keep the copy a separate component: skip voxels 26-adjacent to the
        // existing foreground (tube, thickening, or a spur that wandered close).
        const BinaryVolume base = vol;
        auto touches = [&](int x, int y, int z) {
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        Index3 n{x + dx, y + dy, z + dz};
                        if (geom.contains(n) && base.at(n)) return true;
                    }
            return false;
        };
        std::size_t changed = 0;
        for (int z = 0; z < geom.dims[2]; ++z)
            for (int y = 0; y < geom.dims[1]; ++y)
                for (int x = 0; x < geom.dims[0]; ++x) {
                    std::size_t k = geom.index(x, y, z);
                    if (clutter.data[k] && !vol.data[k] && !touches(x, y, z)) {
                        vol.data[k] = 1;
                        ++changed;
                    }
                }
        record("clutter", samples[samples.size() / 2], changed);
    }

    // Small false-positive noise: isolated blobs kept clear of everything else.
    for (int i = 0; i < cfg.noise_count; ++i) {
        SplitMix64 rng = rng_stream(cfg.seed, 300 + i);
        double keepout = cfg.tube_diameter_mm / 2.0 + cfg.clutter_offset_mm +
                         (cfg.thicken_radius + cfg.noise_radius + 3) * cfg.spacing_mm;
        for (int attempt = 0; attempt < 100; ++attempt) {
            Index3 c{rng.uniform_int(2, geom.dims[0] - 3), rng.uniform_int(2, geom.dims[1] - 3),
                     rng.uniform_int(2, geom.dims[2] - 3)};
            Vec3 world = geom.voxel_to_world(to_vec3(c));
            if (detail::min_distance_to(ph.axis_mm, world) < keepout) continue;
            std::size_t changed = detail::stamp_ball(vol, c, cfg.noise_radius, 1);
            record("noise", world, changed);
            break;
        }
    }

    // Broken canal: erase slabs across the tube, spread over the middle band.
    for (int i = 0; i < cfg.break_count; ++i) {
        SplitMix64 rng = rng_stream(cfg.seed, 400 + i);
        double u = (i + 1.0) / (cfg.break_count + 1.0) + rng.uniform(-0.05, 0.05);
        u = std::clamp(u, 0.38, 0.62);
        std::size_t ci = static_cast<std::size_t>(u * (ph.axis_mm.size() - 1));
        Vec3 c = ph.axis_mm[ci];
        Vec3 tangent = (ph.axis_mm[std::min(ci + 5, ph.axis_mm.size() - 1)] -
                        ph.axis_mm[ci >= 5 ? ci - 5 : 0]).normalized();
        double ball = cfg.tube_diameter_mm / 2.0 + cfg.thicken_radius * cfg.spacing_mm + 0.6;
        int rv = static_cast<int>(std::ceil(ball / cfg.spacing_mm)) + 1;
        Index3 cv = round_voxel(geom.world_to_voxel(c));
        std::size_t changed = 0;
        for (int dz = -rv; dz <= rv; ++dz)
            for (int dy = -rv; dy <= rv; ++dy)
                for (int dx = -rv; dx <= rv; ++dx) {
                    Index3 v{cv[0] + dx, cv[1] + dy, cv[2] + dz};
                    if (!geom.contains(v) || !vol.at(v)) continue;
                    Vec3 w = geom.voxel_to_world(to_vec3(v));
                    if (distance(w, c) > ball) continue;
                    if (std::abs((w - c).dot(tangent)) > cfg.break_gap_mm / 2.0) continue;
                    vol.set(v, 0);
                    ++changed;
                }
        record("break", c, changed);
    }

    if (vol.count() == 0)
        throw std::invalid_argument("corruption magnitudes emptied the volume");
    return vol;
}

struct RecoveryRecord {
    double mcd_gp_mm = 0.0;
    double mcd_pg_mm = 0.0;
    std::size_t components = 0;
    std::size_t terminal_points = 0;
    std::size_t branch_points = 0;
    std::size_t warnings = 0;
};

// End-to-end phantom check: corrupt the tube, run the full pipeline, and
// score the recovered centerline against the analytic axis.
inline RecoveryRecord recovery_score(const PhantomConfig& cfg,
                                     const PostprocessParams& params = PostprocessParams{}) {
    Phantom ph = make_phantom(cfg);
    BinaryVolume pred = corrupt(ph);
    PipelineResult res = run_pipeline(pred, params);

    RecoveryRecord rec;
    rec.warnings = res.warnings.size();
    rec.components = label_components(res.final).components.size();
    auto pts = detect_points(res.final);
    rec.terminal_points = pts.terminals.size();
    rec.branch_points = pts.branches.size();
    if (res.final.count() > 0) {
        auto pred_pts = curve_points_mm(res.final);
        rec.mcd_gp_mm = mcd(ph.axis_mm, pred_pts);
        rec.mcd_pg_mm = mcd(pred_pts, ph.axis_mm);
    }
    return rec;
}

}  // namespace mctrace
