// mctrace: mandibular canal centerline toolbox. One binary, one subcommand
// per pipeline stage. Exit codes: 0 success, 1 computation warning, 2
// usage/input error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mctrace/mctrace.hpp"

namespace fs = std::filesystem;
using namespace mctrace;

namespace {

class StageTimer {
 public:
    explicit StageTimer(std::string name)
        : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start_)
                      .count();
        std::cerr << "[time] " << name_ << " " << ms / 1000.0 << " sec\n";
    }

 private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

struct Manifest {
    std::vector<std::pair<std::string, std::string>> entries;
    void add(const std::string& k, const std::string& v) { entries.emplace_back(k, v); }
    void add(const std::string& k, double v) { add(k, std::to_string(v)); }
    void write(const fs::path& path) const {
        std::ofstream out(path);
        for (const auto& [k, v] : entries) out << k << " " << v << "\n";
    }
};

GridGeometry geometry_from_flags(const std::vector<int>& dims, double spacing,
                                 const std::vector<double>& origin, const std::string& like) {
    GridGeometry g;
    if (!like.empty()) {
        auto v = read_volume(like);
        g = std::holds_alternative<ScalarVolume>(v) ? std::get<ScalarVolume>(v).geom
                                                    : std::get<BinaryVolume>(v).geom;
        return g;
    }
    if (dims.size() != 3) throw std::invalid_argument("provide --dims X Y Z or --like VOLUME");
    g.dims = {dims[0], dims[1], dims[2]};
    g.spacing = Spacing(spacing);
    if (!origin.empty()) {
        if (origin.size() != 3) throw std::invalid_argument("--origin needs 3 values");
        g.origin = {origin[0], origin[1], origin[2]};
    }
    g.validate();
    return g;
}

int run(int argc, char** argv) {
    CLI::App app{"mandibular canal centerline toolbox"};
    app.require_subcommand(1);
    int exit_status = 0;

    // ---- preprocess -------------------------------------------------------
    auto* pre = app.add_subcommand("preprocess", "resample + clip + normalize a scalar volume");
    struct {
        std::string in, out, manifest;
        double spacing = kDefaultIsotropicSpacingMm;
        double lo = kHuClipLow, hi = kHuClipHigh;
        int threads = 1;
    } pre_opt;
    pre->add_option("--in", pre_opt.in)->required();
    pre->add_option("--out", pre_opt.out)->required();
    pre->add_option("--spacing", pre_opt.spacing, "target isotropic spacing (mm)");
    pre->add_option("--clip-lo", pre_opt.lo);
    pre->add_option("--clip-hi", pre_opt.hi);
    pre->add_option("--threads", pre_opt.threads);
    pre->add_option("--manifest", pre_opt.manifest);
    pre->callback([&] {
        StageTimer t("preprocess");
        ScalarVolume vol = read_scalar_volume(pre_opt.in);
        vol = resample_isotropic(vol, pre_opt.spacing, pre_opt.threads);
        vol = normalize(clip_intensity(vol, pre_opt.lo, pre_opt.hi), pre_opt.lo, pre_opt.hi);
        write_volume(vol, pre_opt.out);
        if (!pre_opt.manifest.empty()) {
            Manifest m;
            m.add("subcommand", "preprocess");
            m.add("in", pre_opt.in);
            m.add("out", pre_opt.out);
            m.add("spacing", pre_opt.spacing);
            m.write(pre_opt.manifest);
        }
    });

    // ---- gt ---------------------------------------------------------------
    auto* gt = app.add_subcommand("gt", "generate centerline or tube ground truth from control points");
    struct {
        std::string left, right, out, mode = "centerline", like;
        std::vector<int> dims;
        std::vector<double> origin;
        double spacing = kDefaultIsotropicSpacingMm;
        double diameter = kDefaultTubeDiameterMm;
        double step = kDefaultLineStep;
        int threads = 1;
    } gt_opt;
    gt->add_option("--left", gt_opt.left, "left canal control points (.asc)");
    gt->add_option("--right", gt_opt.right, "right canal control points (.asc)");
    gt->add_option("--out", gt_opt.out)->required();
    gt->add_option("--mode", gt_opt.mode)->check(CLI::IsMember({"centerline", "tube"}));
    gt->add_option("--dims", gt_opt.dims)->expected(3);
    gt->add_option("--spacing", gt_opt.spacing);
    gt->add_option("--origin", gt_opt.origin)->expected(3);
    gt->add_option("--like", gt_opt.like, "take geometry from an existing volume");
    gt->add_option("--diameter", gt_opt.diameter, "tube diameter (mm)");
    gt->add_option("--step", gt_opt.step, "parametric line step");
    gt->add_option("--threads", gt_opt.threads);
    gt->callback([&] {
        StageTimer t("gt");
        if (gt_opt.left.empty() && gt_opt.right.empty())
            throw std::invalid_argument("provide --left and/or --right control point files");
        GridGeometry geom = geometry_from_flags(gt_opt.dims, gt_opt.spacing, gt_opt.origin,
                                                gt_opt.like);
        BinaryVolume out(geom);
        auto add_side = [&](const std::string& path, CanalSide side) {
            if (path.empty()) return;
            auto cps = read_control_points(path, side);
            Polyline poly = scale_to_grid(cps, geom);
            BinaryVolume vol = gt_opt.mode == "tube"
                                   ? tube_from_centerline(poly, geom, gt_opt.diameter,
                                                          gt_opt.threads)
                                   : rasterize_centerline(poly, gt_opt.step);
            for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] |= vol.data[i];
        };
        add_side(gt_opt.left, CanalSide::Left);
        add_side(gt_opt.right, CanalSide::Right);
        write_volume(out, gt_opt.out);
    });

    // ---- postprocess ------------------------------------------------------
    auto* post = app.add_subcommand("postprocess", "refine a raw binary prediction into centerlines");
    struct {
        std::string in, out, out_left, out_right, dump_steps;
        PostprocessParams params;
        int threads = 1;
    } post_opt;
    post->add_option("--in", post_opt.in)->required();
    post->add_option("--out", post_opt.out)->required();
    post->add_option("--out-left", post_opt.out_left);
    post->add_option("--out-right", post_opt.out_right);
    post->add_option("--min-size", post_opt.params.min_component_size);
    post->add_option("--sibling-dist", post_opt.params.sibling_distance);
    post->add_option("--bridge-dist", post_opt.params.bridge_distance);
    post->add_option("--parallel-ratio", post_opt.params.parallel_ratio);
    post->add_option("--step", post_opt.params.line_step);
    post->add_flag("--flip-sides", post_opt.params.flip_sides);
    post->add_option("--dump-steps", post_opt.dump_steps, "directory for step1..step6 volumes");
    post->add_option("--threads", post_opt.threads);
    post->callback([&] {
        StageTimer t("postprocess");
        BinaryVolume pred = read_binary_volume(post_opt.in);
        PipelineResult res = run_pipeline(pred, post_opt.params);
        write_volume(res.final, post_opt.out);
        if (!post_opt.out_left.empty()) write_volume(res.left, post_opt.out_left);
        if (!post_opt.out_right.empty()) write_volume(res.right, post_opt.out_right);
        if (!post_opt.dump_steps.empty()) {
            fs::create_directories(post_opt.dump_steps);
            for (const auto& [name, vol] : res.intermediates)
                write_volume(vol, fs::path(post_opt.dump_steps) / (name + ".mhd"));
        }
        for (const auto& w : res.warnings) {
            std::cerr << "[warn] " << w << "\n";
            exit_status = 1;
        }
    });

    // ---- eval -------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "score a predicted centerline against ground truth");
    struct {
        std::string pred, gt, out;
        double tube_diameter = kDefaultTubeDiameterMm;
        bool per_side = false;
        int threads = 1;
    } ev_opt;
    ev->add_option("--pred", ev_opt.pred)->required();
    ev->add_option("--gt", ev_opt.gt)->required();
    ev->add_option("--out", ev_opt.out, "report file (default: stdout)");
    ev->add_option("--tube-diameter", ev_opt.tube_diameter);
    ev->add_flag("--per-side", ev_opt.per_side);
    ev->add_option("--threads", ev_opt.threads);
    ev->callback([&] {
        StageTimer t("eval");
        BinaryVolume pred = read_binary_volume(ev_opt.pred);
        BinaryVolume gt_vol = read_binary_volume(ev_opt.gt);
        auto emit = [&](const MetricReport& r, const std::string& suffix) {
            if (ev_opt.out.empty()) {
                if (!suffix.empty()) std::cout << "# " << suffix << "\n";
                write_report(r, std::cout);
            } else {
                fs::path p = ev_opt.out;
                if (!suffix.empty())
                    p = p.parent_path() / (p.stem().string() + "_" + suffix + p.extension().string());
                write_report(r, p);
            }
            if (!r.undefined.empty()) exit_status = 1;
        };
        if (ev_opt.per_side) {
            auto ps = split_left_right(pred);
            auto gs = split_left_right(gt_vol);
            emit(evaluate(ps.left, gs.left, ev_opt.tube_diameter, ev_opt.threads), "left");
            emit(evaluate(ps.right, gs.right, ev_opt.tube_diameter, ev_opt.threads), "right");
        } else {
            emit(evaluate(pred, gt_vol, ev_opt.tube_diameter, ev_opt.threads), "");
        }
    });

    // ---- phantom ----------------------------------------------------------
    auto* phc = app.add_subcommand("phantom", "generate a synthetic ground truth + corrupted prediction");
    struct {
        std::string out_dir, family = "helical";
        PhantomConfig cfg;
        std::vector<int> dims;
        int threads = 1;
    } ph_opt;
    phc->add_option("--out-dir", ph_opt.out_dir)->required();
    phc->add_option("--seed", ph_opt.cfg.seed);
    phc->add_option("--dims", ph_opt.dims)->expected(3);
    phc->add_option("--spacing", ph_opt.cfg.spacing_mm);
    phc->add_option("--family", ph_opt.family)
        ->check(CLI::IsMember({"straight", "arc", "helical"}));
    phc->add_option("--diameter", ph_opt.cfg.tube_diameter_mm);
    phc->add_option("--thicken", ph_opt.cfg.thicken_radius);
    phc->add_option("--spurs", ph_opt.cfg.spur_count);
    phc->add_option("--breaks", ph_opt.cfg.break_count);
    phc->add_option("--clutter", ph_opt.cfg.clutter_count);
    phc->add_option("--noise", ph_opt.cfg.noise_count);
    phc->add_option("--threads", ph_opt.threads);
    phc->callback([&] {
        StageTimer t("phantom");
        if (!ph_opt.dims.empty())
            ph_opt.cfg.dims = {ph_opt.dims[0], ph_opt.dims[1], ph_opt.dims[2]};
        ph_opt.cfg.family = ph_opt.family == "straight" ? CurveFamily::Straight
                            : ph_opt.family == "arc"    ? CurveFamily::CircularArc
                                                        : CurveFamily::HelicalArc;
        fs::create_directories(ph_opt.out_dir);
        Phantom ph = make_phantom(ph_opt.cfg, ph_opt.threads);
        CorruptionManifest cm;
        BinaryVolume pred = corrupt(ph, &cm);
        fs::path dir = ph_opt.out_dir;
        write_volume(ph.centerline, dir / "gt_centerline.mhd");
        write_volume(ph.tube, dir / "gt_tube.mhd");
        write_volume(pred, dir / "pred.mhd");
        write_control_points(ph.control_points_mm, dir / "control_points.asc");
        std::ofstream manifest(dir / "manifest.txt");
        manifest << "seed " << ph_opt.cfg.seed << "\nfamily " << ph_opt.family << "\n";
        for (const auto& a : cm.artifacts)
            manifest << a.kind << " center_mm " << a.center_mm.x << " " << a.center_mm.y << " "
                     << a.center_mm.z << " voxels " << a.voxels_changed << "\n";
    });

    // ---- netspec ----------------------------------------------------------
    auto* net = app.add_subcommand("netspec", "print the network shape table and parameter census");
    net->callback([&] {
        StageTimer t("netspec");
        print_netspec(default_block_table(), std::cout);
    });

    // ---- patch ------------------------------------------------------------
    auto* pat = app.add_subcommand("patch", "extract overlapping patches or merge them back");
    struct {
        std::string in, out_dir, merge_dir, out;
        int size = kDefaultPatchSize, overlap = kDefaultPatchOverlap;
    } pat_opt;
    pat->add_option("--in", pat_opt.in, "volume to split");
    pat->add_option("--out-dir", pat_opt.out_dir, "where to write patch_NNNN.mhd + corners.txt");
    pat->add_option("--merge-dir", pat_opt.merge_dir, "patch directory to OR-merge");
    pat->add_option("--out", pat_opt.out, "merged output volume");
    pat->add_option("--size", pat_opt.size);
    pat->add_option("--overlap", pat_opt.overlap);
    pat->callback([&] {
        StageTimer t("patch");
        if (!pat_opt.in.empty() && !pat_opt.out_dir.empty()) {
            BinaryVolume vol = read_binary_volume(pat_opt.in);
            auto set = extract_patches(vol, pat_opt.size, pat_opt.overlap);
            fs::create_directories(pat_opt.out_dir);
            std::ofstream corners(fs::path(pat_opt.out_dir) / "corners.txt");
            corners << vol.geom.dims[0] << " " << vol.geom.dims[1] << " " << vol.geom.dims[2]
                    << " " << set.size << " " << set.overlap << "\n";
            char name[32];
            for (std::size_t i = 0; i < set.patches.size(); ++i) {
                std::snprintf(name, sizeof(name), "patch_%04zu.mhd", i);
                write_volume(set.patches[i].payload, fs::path(pat_opt.out_dir) / name);
                corners << set.patches[i].corner[0] << " " << set.patches[i].corner[1] << " "
                        << set.patches[i].corner[2] << " "
                        << (classify_patch(set.patches[i].payload) == PatchClass::Canal
                                ? "canal" : "background")
                        << "\n";
            }
        } else if (!pat_opt.merge_dir.empty() && !pat_opt.out.empty()) {
            std::ifstream corners(fs::path(pat_opt.merge_dir) / "corners.txt");
            if (!corners) throw ParseError("missing corners.txt in merge dir");
            PatchSet<BinaryVolume> set;
            corners >> set.source_dims[0] >> set.source_dims[1] >> set.source_dims[2] >>
                set.size >> set.overlap;
            int x, y, z;
            std::string cls;
            char name[32];
            std::size_t i = 0;
            while (corners >> x >> y >> z >> cls) {
                std::snprintf(name, sizeof(name), "patch_%04zu.mhd", i++);
                auto patch = read_binary_volume(fs::path(pat_opt.merge_dir) / name);
                if (i == 1) {
                    set.source_geom = patch.geom;
                    set.source_geom.dims = set.source_dims;
                }
                set.patches.push_back({Index3{x, y, z}, std::move(patch)});
            }
            write_volume(merge_patches(set), pat_opt.out);
        } else {
            throw std::invalid_argument("use --in/--out-dir to split or --merge-dir/--out to merge");
        }
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // help/version exit 0, usage errors exit 2
    }
    return exit_status;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
