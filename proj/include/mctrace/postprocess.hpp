// Six-step refinement of a raw binary canal prediction: small-component
// removal, skeletonization, terminal/branch detection, branch trimming,
// parallel-component removal, and gap bridging.
#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <unordered_map>

#include "mctrace/centerline.hpp"
#include "mctrace/components.hpp"
#include "mctrace/core.hpp"
#include "mctrace/skeleton.hpp"

namespace mctrace {

struct PostprocessParams {
    int min_component_size = kDefaultMinComponentSize;
    double sibling_distance = 10.0;   // voxel units
    double bridge_distance = 20.0;    // voxel units
    double parallel_ratio = 0.77;     // min/max ratio at or above which a component is parallel
    double line_step = kDefaultLineStep;
    bool flip_sides = false;
};

// 3x3x3 neighborhood sum including the center; out-of-volume voxels count 0.
inline int neighborhood_sum(const BinaryVolume& vol, const Index3& v) {
    int sum = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                int x = v[0] + dx, y = v[1] + dy, z = v[2] + dz;
                if (vol.geom.contains(x, y, z)) sum += vol.at(x, y, z);
            }
    return sum;
}

inline bool is_terminal_point(const BinaryVolume& vol, const Index3& v) {
    return vol.at(v) && neighborhood_sum(vol, v) == 2;
}

inline bool is_branch_point(const BinaryVolume& vol, const Index3& v) {
    return vol.at(v) && neighborhood_sum(vol, v) > 3;
}

struct SkeletonPoints {
    std::vector<Index3> terminals;
    std::vector<Index3> branches;
};

// Classify every foreground voxel by its 3x3x3 sum: 2 -> terminal point,
// > 3 -> branch point, otherwise neither.
inline SkeletonPoints detect_points(const BinaryVolume& skel) {
    SkeletonPoints out;
    for (const auto& v : skel.foreground()) {
        int sum = neighborhood_sum(skel, v);
        if (sum == 2) out.terminals.push_back(v);
        else if (sum > 3) out.branches.push_back(v);
    }
    return out;
}

namespace detail {

inline double step_cost(const Index3& o) {
    int n = std::abs(o[0]) + std::abs(o[1]) + std::abs(o[2]);
    return n == 1 ? 1.0 : n == 2 ? std::numbers::sqrt2 : std::numbers::sqrt3;
}

// Dijkstra over foreground voxels with 26-neighborhood moves; returns the
// shortest path length from src to every reachable foreground voxel.
inline std::unordered_map<std::size_t, double> geodesic_field(const BinaryVolume& vol,
                                                              const Index3& src) {
    std::unordered_map<std::size_t, double> dist;
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    auto lin = [&](const Index3& v) { return vol.geom.index(v[0], v[1], v[2]); };
    auto coord = [&](std::size_t i) {
        int nx = vol.geom.dims[0], ny = vol.geom.dims[1];
        return Index3{static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
                      static_cast<int>(i / (static_cast<std::size_t>(nx) * ny))};
    };
    dist[lin(src)] = 0.0;
    heap.emplace(0.0, lin(src));
    const auto& offsets = neighbor_offsets_26();
    while (!heap.empty()) {
        auto [d, i] = heap.top();
        heap.pop();
        auto it = dist.find(i);
        if (it != dist.end() && d > it->second) continue;
        Index3 v = coord(i);
        for (const auto& o : offsets) {
            Index3 n{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
            if (!vol.geom.contains(n) || !vol.at(n)) continue;
            double nd = d + step_cost(o);
            std::size_t ni = lin(n);
            auto nit = dist.find(ni);
            if (nit == dist.end() || nd < nit->second) {
                dist[ni] = nd;
                heap.emplace(nd, ni);
            }
        }
    }
    return dist;
}

}  // namespace detail

// Shortest path length between two foreground voxels constrained to the
// foreground, 26-neighborhood step costs 1, sqrt(2), sqrt(3).
inline double geodesic_distance(const BinaryVolume& vol, const Index3& a, const Index3& b) {
    if (!vol.geom.contains(a) || !vol.at(a) || !vol.geom.contains(b) || !vol.at(b))
        throw std::invalid_argument("geodesic endpoints must be foreground voxels");
    auto field = detail::geodesic_field(vol, a);
    auto it = field.find(vol.geom.index(b[0], b[1], b[2]));
    if (it == field.end())
        throw std::invalid_argument("geodesic endpoints lie in different components");
    return it->second;
}

struct TerminalSelection {
    std::vector<Index3> valid;
    std::vector<Index3> invalid;
    std::vector<int> degenerate_components;  // labels with < 2 terminals (closed loops)
};

namespace detail {

inline double euclid(const Index3& a, const Index3& b) {
    double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline bool raster_less(const GridGeometry& g, const Index3& a, const Index3& b) {
    return g.index(a[0], a[1], a[2]) < g.index(b[0], b[1], b[2]);
}

}  // namespace detail

// Step-4 terminal classification. Per component the geodesically furthest
// terminal pair are the candidates; a candidate with a close sibling (Euclidean
// distance below the threshold) is replaced by whichever group member lies
// closest to the nearest terminal of another component. Everything else is
// invalid. Ties break on raster order.
inline TerminalSelection select_valid_terminals(const BinaryVolume& skel, const ComponentMap& cmap,
                                                double sibling_distance = 10.0) {
    TerminalSelection sel;
    auto points = detect_points(skel);
    std::map<int, std::vector<Index3>> terminals_by_comp;
    for (const auto& t : points.terminals) terminals_by_comp[cmap.label_at(t)].push_back(t);

    for (const auto& comp : cmap.components) {
        auto it = terminals_by_comp.find(comp.label);
        std::vector<Index3> tps = it == terminals_by_comp.end() ? std::vector<Index3>{} : it->second;
        if (tps.size() < 2) {
            sel.degenerate_components.push_back(comp.label);
            continue;
        }
        if (tps.size() == 2) {
            sel.valid.push_back(tps[0]);
            sel.valid.push_back(tps[1]);
            continue;
        }

        // Geodesically furthest pair, raster tie-break.
        double best = -1.0;
        std::pair<Index3, Index3> candidates{tps[0], tps[1]};
        for (std::size_t i = 0; i < tps.size(); ++i) {
            auto field = detail::geodesic_field(skel, tps[i]);
            for (std::size_t j = i + 1; j < tps.size(); ++j) {
                auto fit = field.find(skel.geom.index(tps[j][0], tps[j][1], tps[j][2]));
                if (fit == field.end()) continue;
                if (fit->second > best) {
                    best = fit->second;
                    candidates = {tps[i], tps[j]};
                }
            }
        }

        std::vector<Index3> other_terminals;
        for (const auto& [label, list] : terminals_by_comp)
            if (label != comp.label)
                for (const auto& t : list) other_terminals.push_back(t);

        auto resolve = [&](const Index3& candidate, const Index3& partner) {
            std::vector<Index3> group{candidate};
            for (const auto& t : tps) {
                if (t == candidate || t == partner) continue;
                if (detail::euclid(t, candidate) < sibling_distance) group.push_back(t);
            }
            if (group.size() == 1 || other_terminals.empty()) return candidate;
            // Nearest terminal of any other component, seen from the candidate.
            Index3 reference = other_terminals[0];
            double ref_d = detail::euclid(candidate, reference);
            for (const auto& t : other_terminals) {
                double d = detail::euclid(candidate, t);
                if (d < ref_d || (d == ref_d && detail::raster_less(skel.geom, t, reference))) {
                    ref_d = d;
                    reference = t;
                }
            }
            Index3 winner = group[0];
            double wd = detail::euclid(winner, reference);
            for (const auto& g : group) {
                double d = detail::euclid(g, reference);
                if (d < wd || (d == wd && detail::raster_less(skel.geom, g, winner))) {
                    wd = d;
                    winner = g;
                }
            }
            return winner;
        };

        Index3 w1 = resolve(candidates.first, candidates.second);
        Index3 w2 = resolve(candidates.second, candidates.first);
        sel.valid.push_back(w1);
        sel.valid.push_back(w2);
        for (const auto& t : tps)
            if (t != w1 && t != w2) sel.invalid.push_back(t);
    }
    return sel;
}

// Erase the chain from each invalid terminal up to (not including) the first
// branch point. Branch points are the ones detected on the input skeleton, so
// a junction stays put even after the erased arm stops contributing to its
// neighborhood sum. A walk that never meets a branch point erases its chain.
inline BinaryVolume trim_branches(const BinaryVolume& skel, const std::vector<Index3>& invalid) {
    BinaryVolume out = skel;
    BinaryVolume branch_mask(skel.geom);
    for (const auto& b : detect_points(skel).branches) branch_mask.set(b, 1);
    std::vector<Index3> sorted = invalid;
    std::sort(sorted.begin(), sorted.end(), [&](const Index3& a, const Index3& b) {
        return detail::raster_less(out.geom, a, b);
    });
    const auto& offsets = neighbor_offsets_26();
    for (const auto& tp : sorted) {
        if (!out.at(tp)) continue;
        Index3 cur = tp;
        while (true) {
            if (branch_mask.at(cur)) break;  // keep the branch point
            std::vector<Index3> next;
            for (const auto& o : offsets) {
                Index3 n{cur[0] + o[0], cur[1] + o[1], cur[2] + o[2]};
                if (out.geom.contains(n) && out.at(n)) next.push_back(n);
            }
            out.set(cur, 0);
            if (next.size() != 1) break;  // chain end or junction
            cur = next[0];
        }
    }
    return out;
}

// Step 5: drop components that run parallel to already-valid ones. The largest
// component is always valid; a smaller component whose two terminal distances
// to the valid set have min/max ratio >= the threshold is removed.
inline BinaryVolume remove_parallel_components(const BinaryVolume& skel,
                                               double parallel_ratio = 0.77) {
    auto cmap = label_components(skel);
    if (cmap.components.size() <= 1) return skel;

    std::vector<const Component*> order;
    for (const auto& c : cmap.components) order.push_back(&c);
    std::sort(order.begin(), order.end(), [](const Component* a, const Component* b) {
        if (a->voxels.size() != b->voxels.size()) return a->voxels.size() > b->voxels.size();
        return a->label < b->label;
    });

    auto points = detect_points(skel);
    std::map<int, std::vector<Index3>> terminals_by_comp;
    for (const auto& t : points.terminals) terminals_by_comp[cmap.label_at(t)].push_back(t);

    std::vector<Index3> valid_voxels = order[0]->voxels;
    std::vector<int> valid_labels{order[0]->label};
    for (std::size_t i = 1; i < order.size(); ++i) {
        const auto& tps = terminals_by_comp[order[i]->label];
        bool keep = true;
        if (tps.size() >= 2) {
            double dmin = std::numeric_limits<double>::infinity();
            double dmax = 0.0;
            for (const auto& tp : tps) {
                double d = std::numeric_limits<double>::infinity();
                for (const auto& v : valid_voxels) d = std::min(d, detail::euclid(tp, v));
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
            }
            double ratio = dmax > 0.0 ? dmin / dmax : 1.0;
            if (ratio >= parallel_ratio) keep = false;
        }
        if (keep) {
            valid_labels.push_back(order[i]->label);
            valid_voxels.insert(valid_voxels.end(), order[i]->voxels.begin(),
                                order[i]->voxels.end());
        }
    }

    BinaryVolume out(skel.geom);
    for (int label : valid_labels)
        for (const auto& v : cmap.components[label - 1].voxels) out.set(v, 1);
    return out;
}

struct BridgeResult {
    BinaryVolume volume;
    std::vector<std::string> warnings;
};

namespace detail {

struct DisjointSet {
    std::vector<int> parent;
    explicit DisjointSet(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

}  // namespace detail

// Step 6: connect broken parts. The Euclidean-furthest terminal pair over all
// components are the absolute endpoints and never participate; the rest are
// matched greedily nearest-first across distinct components (threshold in
// voxel units, each terminal used once) and joined by rasterized lines.
inline BridgeResult bridge_gaps(const BinaryVolume& skel, double bridge_distance = 20.0,
                                double line_step = kDefaultLineStep) {
    BridgeResult result{skel, {}};
    auto cmap = label_components(skel);
    if (cmap.components.size() <= 1) return result;

    auto points = detect_points(skel);
    struct Tp {
        Index3 v;
        int comp;
    };
    std::vector<Tp> tps;
    for (const auto& t : points.terminals) tps.push_back({t, cmap.label_at(t)});
    if (tps.size() < 2) return result;

    // Absolute terminal points: the globally furthest pair.
    std::size_t abs_a = 0, abs_b = 1;
    double best = -1.0;
    for (std::size_t i = 0; i < tps.size(); ++i)
        for (std::size_t j = i + 1; j < tps.size(); ++j) {
            double d = detail::euclid(tps[i].v, tps[j].v);
            if (d > best) {
                best = d;
                abs_a = i;
                abs_b = j;
            }
        }

    struct Pair {
        double dist;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < tps.size(); ++i)
        for (std::size_t j = i + 1; j < tps.size(); ++j) {
            if (i == abs_a || i == abs_b || j == abs_a || j == abs_b) continue;
            if (tps[i].comp == tps[j].comp) continue;
            double d = detail::euclid(tps[i].v, tps[j].v);
            if (d <= bridge_distance) pairs.push_back({d, i, j});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.dist != b.dist) return a.dist < b.dist;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });

    std::vector<bool> used(tps.size(), false);
    detail::DisjointSet dsu(static_cast<int>(cmap.components.size()) + 1);
    for (const auto& p : pairs) {
        if (used[p.i] || used[p.j]) continue;
        if (!dsu.unite(tps[p.i].comp, tps[p.j].comp)) continue;
        used[p.i] = used[p.j] = true;
        Polyline line;
        line.frame = Frame::Voxel;
        line.geom = skel.geom;
        line.points = {to_vec3(tps[p.i].v), to_vec3(tps[p.j].v)};
        BinaryVolume segment = rasterize_centerline(line, line_step);
        for (std::size_t k = 0; k < segment.data.size(); ++k)
            result.volume.data[k] |= segment.data[k];
    }

    for (std::size_t i = 0; i < tps.size(); ++i) {
        if (i == abs_a || i == abs_b || used[i]) continue;
        // Terminals of components already joined through their other end are fine.
        if (dsu.find(tps[i].comp) != dsu.find(tps[abs_a].comp) ||
            dsu.find(tps[i].comp) != dsu.find(tps[abs_b].comp))
            result.warnings.push_back("residual gap at terminal (" + std::to_string(tps[i].v[0]) +
                                      ", " + std::to_string(tps[i].v[1]) + ", " +
                                      std::to_string(tps[i].v[2]) + ")");
    }
    return result;
}

struct SideSplit {
    BinaryVolume left, right;
    std::vector<std::string> warnings;
};

// Assign the two largest components to sides by centroid x (smaller x is the
// patient's right by radiological convention; flip reverses the mapping).
inline SideSplit split_left_right(const BinaryVolume& vol, bool flip = false) {
    SideSplit out{BinaryVolume(vol.geom), BinaryVolume(vol.geom), {}};
    auto cmap = label_components(vol);
    if (cmap.components.empty()) {
        out.warnings.push_back("empty volume: both sides empty");
        return out;
    }
    std::vector<const Component*> order;
    for (const auto& c : cmap.components) order.push_back(&c);
    std::sort(order.begin(), order.end(), [](const Component* a, const Component* b) {
        if (a->voxels.size() != b->voxels.size()) return a->voxels.size() > b->voxels.size();
        return a->label < b->label;
    });
    auto centroid_x = [](const Component& c) {
        double s = 0.0;
        for (const auto& v : c.voxels) s += v[0];
        return s / static_cast<double>(c.voxels.size());
    };
    auto assign = [&](const Component& c, bool to_left) {
        BinaryVolume& dst = to_left ? out.left : out.right;
        for (const auto& v : c.voxels) dst.set(v, 1);
    };
    if (order.size() == 1) {
        bool to_left = centroid_x(*order[0]) >= (vol.geom.dims[0] - 1) / 2.0;
        if (flip) to_left = !to_left;
        assign(*order[0], to_left);
        out.warnings.push_back("single component: one side left empty");
        return out;
    }
    bool first_is_left = centroid_x(*order[0]) >= centroid_x(*order[1]);
    if (flip) first_is_left = !first_is_left;
    assign(*order[0], first_is_left);
    assign(*order[1], !first_is_left);
    if (order.size() > 2)
        out.warnings.push_back("more than 2 components: extras dropped from side split");
    return out;
}

struct PipelineResult {
    BinaryVolume final;
    BinaryVolume left, right;
    std::map<std::string, BinaryVolume> intermediates;  // step1 .. step6
    std::vector<std::string> warnings;
    std::vector<int> degenerate_components;
};

namespace detail {

// Iterate terminal selection + trimming until every component has at most the
// two valid terminals.
inline BinaryVolume trim_to_two_terminals(const BinaryVolume& skel, double sibling_distance,
                                          std::vector<int>* degenerate,
                                          int max_rounds = 16) {
    BinaryVolume cur = skel;
    for (int round = 0; round < max_rounds; ++round) {
        auto cmap = label_components(cur);
        auto sel = select_valid_terminals(cur, cmap, sibling_distance);
        if (degenerate)
            degenerate->insert(degenerate->end(), sel.degenerate_components.begin(),
                               sel.degenerate_components.end());
        if (sel.invalid.empty()) break;
        cur = trim_branches(cur, sel.invalid);
    }
    return cur;
}

// Alternate thinning and trimming until a joint fixed point; makes the final
// centerline stable under re-running the whole pipeline.
inline BinaryVolume thin_trim_closure(const BinaryVolume& vol, double sibling_distance,
                                      int max_rounds = 16) {
    BinaryVolume cur = vol;
    for (int round = 0; round < max_rounds; ++round) {
        BinaryVolume next = trim_to_two_terminals(skeletonize(cur), sibling_distance, nullptr);
        if (next.data == cur.data) break;
        cur = std::move(next);
    }
    return cur;
}

}  // namespace detail

inline PipelineResult run_pipeline(const BinaryVolume& pred,
                                   const PostprocessParams& params = PostprocessParams{}) {
    PipelineResult result;
    for (auto v : pred.data)
        if (v > 1) throw std::invalid_argument("prediction volume must be binary");

    BinaryVolume step1 = remove_small_components(label_components(pred), params.min_component_size);
    result.intermediates["step1"] = step1;
    if (step1.count() == 0) {
        result.warnings.push_back("prediction empty after small-component removal");
        result.final = step1;
        result.left = BinaryVolume(pred.geom);
        result.right = BinaryVolume(pred.geom);
        result.intermediates["step2"] = step1;
        result.intermediates["step3"] = step1;
        result.intermediates["step4"] = step1;
        result.intermediates["step5"] = step1;
        result.intermediates["step6"] = step1;
        return result;
    }

    BinaryVolume step2 = skeletonize(step1);
    result.intermediates["step2"] = step2;
    result.intermediates["step3"] = step2;  // point detection, no voxel change

    BinaryVolume step4 =
        detail::trim_to_two_terminals(step2, params.sibling_distance, &result.degenerate_components);
    result.intermediates["step4"] = step4;

    BinaryVolume step5 = remove_parallel_components(step4, params.parallel_ratio);
    result.intermediates["step5"] = step5;

    auto bridged = bridge_gaps(step5, params.bridge_distance, params.line_step);
    result.intermediates["step6"] = bridged.volume;
    result.warnings.insert(result.warnings.end(), bridged.warnings.begin(),
                           bridged.warnings.end());

    result.final = detail::thin_trim_closure(bridged.volume, params.sibling_distance);

    auto sides = split_left_right(result.final, params.flip_sides);
    result.left = std::move(sides.left);
    result.right = std::move(sides.right);
    result.warnings.insert(result.warnings.end(), sides.warnings.begin(), sides.warnings.end());
    return result;
}

}  // namespace mctrace
