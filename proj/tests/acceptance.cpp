// Acceptance gate: one check per release criterion, each printing a single
// PASS/FAIL line. Exit status is nonzero if any criterion fails.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mctrace/mctrace.hpp"
#include "test_support.hpp"

using namespace mctrace;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool ok, const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", index, name,
                detail.empty() ? "" : " — ", detail.c_str());
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. Shape propagation reproduces all 14 block shapes.
void criterion1() {
    auto t0 = Clock::now();
    struct Row {
        TensorShape in, out;
    };
    const Row expected[14] = {
        {{64, 64, 64, 1}, {64, 64, 64, 64}},   {{64, 64, 64, 64}, {32, 32, 64, 64}},
        {{32, 32, 64, 64}, {32, 32, 64, 128}}, {{32, 32, 64, 128}, {16, 16, 64, 128}},
        {{16, 16, 64, 128}, {16, 16, 64, 256}},{{16, 16, 64, 256}, {8, 8, 64, 256}},
        {{8, 8, 64, 256}, {8, 8, 64, 512}},    {{8, 8, 64, 512}, {16, 16, 64, 768}},
        {{16, 16, 64, 768}, {16, 16, 64, 256}},{{16, 16, 64, 256}, {32, 32, 64, 384}},
        {{32, 32, 64, 384}, {32, 32, 64, 128}},{{32, 32, 64, 128}, {64, 64, 64, 192}},
        {{64, 64, 64, 192}, {64, 64, 64, 64}}, {{64, 64, 64, 64}, {64, 64, 64, 2}},
    };
    auto shapes = propagate_shapes(default_block_table());
    bool ok = shapes.size() == 14;
    for (int i = 0; ok && i < 14; ++i)
        ok = shapes[i].input == expected[i].in && shapes[i].output == expected[i].out;
    double dt = seconds_since(t0);
    report(1, "block shape table reproduction", ok && dt < 1.0,
           "14 blocks, " + std::to_string(dt) + " s");
}

// 2. Parameter census: hand-summed per-block oracle; delta to the published
// total is reported, not asserted.
void criterion2() {
    auto spec = default_block_table();
    auto census = count_parameters(spec);
    const long long expected[14] = {112448, 0, 663808, 0, 2654720, 0, 10617856, 2097664,
                                    7078400, 524544, 1769728, 131200, 442496, 130};
    bool ok = census.per_block.size() == 14 && census.total == 26092994;
    for (int i = 0; ok && i < 14; ++i) ok = census.per_block[i].parameters == expected[i];
    ok = ok && census.per_block[0].parameters == 1792 + 110656;
    // The census printout must carry the published figure and the delta line.
    std::ostringstream out;
    print_netspec(spec, out);
    ok = ok && out.str().find("19077636") != std::string::npos &&
         out.str().find("closest convention") != std::string::npos;
    long long delta = census.total - kPublishedParameterTotal;
    report(2, "parameter census vs hand oracle", ok,
           "total 26092994, delta to reported " + std::to_string(delta));
}

// 3. Phantom recovery over 20 seeds with all corruption modes at defaults.
void criterion3() {
    auto t0 = Clock::now();
    bool ok = true;
    double worst_mcd = 0.0;
    std::string first_fail;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        PhantomConfig cfg;
        cfg.seed = seed;
        auto rec = recovery_score(cfg);
        worst_mcd = std::max({worst_mcd, rec.mcd_gp_mm, rec.mcd_pg_mm});
        bool this_ok = rec.components == 1 && rec.terminal_points == 2 &&
                       rec.branch_points == 0 && rec.mcd_gp_mm <= 0.8 && rec.mcd_pg_mm <= 0.8;
        if (!this_ok && first_fail.empty())
            first_fail = "seed " + std::to_string(seed) + ": comps " +
                         std::to_string(rec.components) + ", tps " +
                         std::to_string(rec.terminal_points) + ", bps " +
                         std::to_string(rec.branch_points) + ", mcd " +
                         std::to_string(rec.mcd_gp_mm) + "/" + std::to_string(rec.mcd_pg_mm);
        ok = ok && this_ok;
    }
    double dt = seconds_since(t0);
    ok = ok && dt < 60.0;
    report(3, "phantom recovery on 20 seeds", ok,
           first_fail.empty() ? "worst MCD " + std::to_string(worst_mcd) + " mm, " +
                                    std::to_string(dt) + " s"
                              : first_fail);
}

// 4. Metric implementations against brute-force oracles.
void criterion4() {
    bool ok = true;
    SplitMix64 rng{20260826};
    for (int trial = 0; trial < 100 && ok; ++trial) {
        GridGeometry g = testsupport::make_geom(8, 8, 8);
        BinaryVolume pred(g), gt(g);
        for (std::size_t i = 0; i < pred.data.size(); ++i) {
            pred.data[i] = rng.uniform() < 0.35;
            gt.data[i] = rng.uniform() < 0.35;
        }
        auto c = confusion(pred, gt);
        auto o = testsupport::brute_confusion(pred, gt);
        ok = c.tp == o.tp && c.fp == o.fp && c.fn == o.fn && c.tn == o.tn;
        if (!ok) break;
        if (o.tp + o.fp > 0) ok = ok && precision(c).value == double(o.tp) / double(o.tp + o.fp);
        if (o.tp + o.fn > 0) ok = ok && recall(c).value == double(o.tp) / double(o.tp + o.fn);
        if (o.tp + o.fp + o.fn > 0) {
            double j = double(o.tp) / double(o.tp + o.fp + o.fn);
            ok = ok && iou(c).value == j;
            ok = ok && std::abs(f1_score(c).value - 2.0 * j / (1.0 + j)) < 1e-12;
            double bg = double(o.tn) / double(o.tn + o.fp + o.fn);
            ok = ok && std::abs(mean_iou(pred, gt).value - (j + bg) / 2.0) < 1e-15;
        }
    }
    for (int trial = 0; trial < 100 && ok; ++trial) {
        std::size_t n = 1 + rng.next() % 200, m = 1 + rng.next() % 200;
        std::vector<Vec3> from, to;
        for (std::size_t i = 0; i < n; ++i)
            from.push_back({rng.uniform(-25, 25), rng.uniform(-25, 25), rng.uniform(-25, 25)});
        for (std::size_t i = 0; i < m; ++i)
            to.push_back({rng.uniform(-25, 25), rng.uniform(-25, 25), rng.uniform(-25, 25)});
        ok = std::abs(mcd(from, to) - testsupport::brute_mcd(from, to)) < 1e-9;
    }
    report(4, "metric oracle equivalence (100+100 random cases)", ok);
}

// 5. Component-size boundary at 50.
void criterion5() {
    GridGeometry g = testsupport::make_geom(60, 8, 8);
    auto line49 = testsupport::straight_line(g, {0, 1, 1}, {1, 0, 0}, 49);
    auto line50 = testsupport::straight_line(g, {0, 5, 5}, {1, 0, 0}, 50);
    BinaryVolume both(g);
    for (std::size_t i = 0; i < both.data.size(); ++i)
        both.data[i] = line49.data[i] | line50.data[i];
    auto kept = remove_small_components(label_components(both), 50);
    bool ok = kept.count() == 50 && kept.at(0, 5, 5) == 1 && kept.at(0, 1, 1) == 0;
    report(5, "size-49 removed, size-50 kept", ok);
}

// 6. Patch extraction/merge round trip and corner arithmetic.
void criterion6() {
    bool ok = patch_corners(64) == std::vector<int>{0} &&
              patch_corners(100) == std::vector<int>{0, 36} &&
              patch_corners(118) == std::vector<int>{0, 54};
    for (auto dims : std::vector<Index3>{{64, 64, 64}, {100, 100, 100}, {118, 118, 118},
                                         {64, 100, 118}}) {
        GridGeometry g = testsupport::make_geom(dims[0], dims[1], dims[2], 0.4);
        BinaryVolume v(g);
        for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = (i * 2654435761u) % 5 == 0;
        auto merged = merge_patches(extract_patches(v));
        ok = ok && merged.data == v.data;
        for (int a = 0; a < 3; ++a)
            ok = ok && patch_corners(dims[a]) == testsupport::brute_corners(dims[a], 64, 10);
    }
    report(6, "patch round trip on 64/100/118/mixed volumes", ok);
}

// 7. Terminal/branch point classification.
void criterion7() {
    GridGeometry g = testsupport::make_geom(13, 13, 13);
    auto line = testsupport::straight_line(g, {2, 2, 2}, {1, 0, 0}, 6);
    auto lp = detect_points(line);
    bool ok = lp.terminals.size() == 2 && lp.branches.empty();

    BinaryVolume y(g);
    for (int i = 0; i <= 6; ++i) y.set({i, 6, 6}, 1);
    for (int i = 1; i <= 5; ++i) y.set({6 + i, 6 + i, 6}, 1);
    for (int i = 1; i <= 5; ++i) y.set({6 + i, 6 - i, 6}, 1);
    auto yp = detect_points(y);
    ok = ok && yp.terminals.size() == 3 && yp.branches.size() >= 1 &&
         neighborhood_sum(y, {6, 6, 6}) == 4;

    BinaryVolume iso(g);
    iso.set({5, 5, 5}, 1);
    auto ip = detect_points(iso);
    ok = ok && ip.terminals.empty() && ip.branches.empty();
    report(7, "3x3x3 point detection on line / junction / isolated voxel", ok);
}

// 8. Resampling and intensity conditioning.
void criterion8() {
    bool ok = true;
    {
        ScalarVolume v(testsupport::make_geom(10, 12, 8, 0.7));
        for (auto& x : v.data) x = 17.5f;
        auto out = resample_isotropic(v, 0.4);
        for (auto x : out.data) ok = ok && x == 17.5f;
    }
    {
        GridGeometry g = testsupport::make_geom(20, 20, 20, 0.7);
        ScalarVolume v(g);
        for (int z = 0; z < 20; ++z)
            for (int y = 0; y < 20; ++y)
                for (int x = 0; x < 20; ++x) {
                    Vec3 w = g.voxel_to_world(Vec3(x, y, z));
                    v.at(x, y, z) = static_cast<float>(0.5 * w.x + 0.25 * w.y - 0.125 * w.z);
                }
        auto out = resample_isotropic(v, 0.4);
        for (int z = 2; z < out.geom.dims[2] - 2 && ok; ++z)
            for (int y = 2; y < out.geom.dims[1] - 2 && ok; ++y)
                for (int x = 2; x < out.geom.dims[0] - 2 && ok; ++x) {
                    Vec3 w = out.geom.voxel_to_world(Vec3(x, y, z));
                    ok = std::abs(out.at(x, y, z) - (0.5 * w.x + 0.25 * w.y - 0.125 * w.z)) < 1e-4;
                }
    }
    {
        ScalarVolume v(testsupport::make_geom(2, 2, 1));
        v.data = {6000.0f, -1300.0f, -1000.0f, 3095.0f};
        auto clipped = clip_intensity(v);
        ok = ok && clipped.data[0] == 3095.0f && clipped.data[1] == -1000.0f;
        auto norm = normalize(clipped);
        ok = ok && norm.data[2] == 0.0f && norm.data[3] == 1.0f;
    }
    report(8, "resampling invariance, HU clip, normalization endpoints", ok);
}

// 9. I/O round trips.
void criterion9() {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "mctrace_acceptance_io";
    fs::create_directories(dir);
    bool ok = true;
    {
        BinaryVolume v(testsupport::make_geom(5, 4, 3, 0.4, Vec3{1, 2, 3}));
        for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = (i % 3) == 0;
        write_volume(v, dir / "b.mhd");
        ok = ok && read_binary_volume(dir / "b.mhd").data == v.data;
    }
    {
        ScalarVolume v(testsupport::make_geom(4, 4, 4));
        for (std::size_t i = 0; i < v.data.size(); ++i)
            v.data[i] = static_cast<float>(i) * 0.337f - 7.25f;
        write_volume(v, dir / "f.mhd");
        ok = ok && read_scalar_volume(dir / "f.mhd").data == v.data;
    }
    {
        ScalarVolume v(testsupport::make_geom(3, 2, 2));
        v.data = {0, -32768, 32767, 100, -100, 3095, 1, 2, 3, 4, 5, 6};
        write_volume(v, dir / "s.mhd", ElementType::Int16);
        ok = ok && read_scalar_volume(dir / "s.mhd").data == v.data;
    }
    {
        std::ofstream(dir / "cp.asc") << "# golden control points\n"
                                      << "1.5 -2.25 3\n10 20.125 -30\n0.5 0.25 0.125\n";
        auto cps = read_control_points(dir / "cp.asc");
        ok = ok && cps.points.size() == 3 && cps.points[0].x == 1.5 &&
             cps.points[0].y == -2.25 && cps.points[1].z == -30.0 &&
             cps.points[2].z == 0.125;
    }
    fs::remove_all(dir);
    report(9, "volume and control-point round trips", ok);
}

// 10. Idempotence on all phantom seeds and thread-count determinism.
void criterion10() {
    bool ok = true;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 20 && ok; ++seed) {
        PhantomConfig cfg;
        cfg.seed = seed;
        auto ph = make_phantom(cfg);
        auto pred = corrupt(ph);
        auto once = run_pipeline(pred);
        auto twice = run_pipeline(once.final);
        ok = twice.final.data == once.final.data;
        if (!ok) detail = "not idempotent at seed " + std::to_string(seed);
    }
    if (ok) {
        PhantomConfig cfg;
        cfg.seed = 5;
        auto a = make_phantom(cfg, 1);
        auto b = make_phantom(cfg, 8);
        ok = a.tube.data == b.tube.data;
        auto axis = a.axis_mm;
        ok = ok && tube_from_samples(axis, a.geom, 3.0, 1).data ==
                       tube_from_samples(axis, a.geom, 3.0, 8).data;
        GridGeometry g = testsupport::make_geom(33, 29, 27, 0.55);
        ScalarVolume v(g);
        for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = float((i * 131) % 997);
        ok = ok && resample_isotropic(v, 0.4, 1).data == resample_isotropic(v, 0.4, 8).data;
        if (!ok) detail = "thread-count dependence detected";
    }
    report(10, "pipeline idempotence and 1-vs-8-thread determinism", ok, detail);
}

// 11. Postprocessing a 300^3 phantom volume inside the time budget.
void criterion11() {
    PhantomConfig cfg;
    cfg.seed = 7;
    cfg.dims = {300, 300, 300};
    auto ph = make_phantom(cfg, 8);
    auto pred = corrupt(ph);
    auto t0 = Clock::now();
    auto res = run_pipeline(pred);
    double dt = seconds_since(t0);
    bool ok = dt < 10.0 && res.final.count() > 0;
    report(11, "300^3 postprocess within 10 s", ok, std::to_string(dt) + " s");
}

}  // namespace

int main() {
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    criterion11();
    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
