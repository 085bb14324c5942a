// 26-connected component labeling of binary volumes.
#pragma once

#include <deque>

#include "mctrace/core.hpp"

namespace mctrace {

constexpr int kDefaultMinComponentSize = 50;

struct Component {
    int label = 0;  // 1-based
    std::vector<Index3> voxels;
};

struct ComponentMap {
    GridGeometry geom;
    std::vector<std::int32_t> labels;  // 0 = background
    std::vector<Component> components; // discovery order, label i+1 at index i

    std::int32_t label_at(const Index3& v) const {
        return labels[geom.index(v[0], v[1], v[2])];
    }
};

// Flood-fill labeling in raster-scan discovery order, 26-connectivity.
inline ComponentMap label_components(const BinaryVolume& bin) {
    ComponentMap cmap;
    cmap.geom = bin.geom;
    cmap.labels.assign(bin.data.size(), 0);
    const auto& d = bin.geom.dims;
    const auto& offsets = neighbor_offsets_26();
    std::deque<Index3> queue;
    for (int z = 0; z < d[2]; ++z)
        for (int y = 0; y < d[1]; ++y)
            for (int x = 0; x < d[0]; ++x) {
                if (!bin.at(x, y, z) || cmap.labels[bin.geom.index(x, y, z)]) continue;
                Component comp;
                comp.label = static_cast<int>(cmap.components.size()) + 1;
                queue.push_back({x, y, z});
                cmap.labels[bin.geom.index(x, y, z)] = comp.label;
                while (!queue.empty()) {
                    Index3 v = queue.front();
                    queue.pop_front();
                    comp.voxels.push_back(v);
                    for (const auto& o : offsets) {
                        Index3 n{v[0] + o[0], v[1] + o[1], v[2] + o[2]};
                        if (!bin.geom.contains(n) || !bin.at(n)) continue;
                        auto& lbl = cmap.labels[bin.geom.index(n[0], n[1], n[2])];
                        if (lbl) continue;
                        lbl = comp.label;
                        queue.push_back(n);
                    }
                }
                cmap.components.push_back(std::move(comp));
            }
    return cmap;
}

// Keep components with size >= min_size (strictly smaller ones are removed).
inline BinaryVolume remove_small_components(const ComponentMap& cmap,
                                            int min_size = kDefaultMinComponentSize) {
    BinaryVolume out(cmap.geom);
    for (const auto& comp : cmap.components) {
        if (static_cast<int>(comp.voxels.size()) < min_size) continue;
        for (const auto& v : comp.voxels) out.set(v, 1);
    }
    return out;
}

}  // namespace mctrace
