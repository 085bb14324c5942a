// Core value types for volumetric canal tracing: vectors, grid geometry,
// scalar/binary volumes, and small shared utilities.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mctrace {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        double n = norm();
        if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
        return *this / n;
    }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

using Index3 = std::array<int, 3>;

inline Vec3 to_vec3(const Index3& i) {
    return {static_cast<double>(i[0]), static_cast<double>(i[1]), static_cast<double>(i[2])};
}

// Millimeters per voxel along each axis. Strictly positive.
struct Spacing {
    double sx = 1.0, sy = 1.0, sz = 1.0;

    Spacing() = default;
    Spacing(double x, double y, double z) : sx(x), sy(y), sz(z) { validate(); }
    explicit Spacing(double iso) : Spacing(iso, iso, iso) {}

    void validate() const {
        if (!(sx > 0.0 && sy > 0.0 && sz > 0.0) ||
            !std::isfinite(sx) || !std::isfinite(sy) || !std::isfinite(sz))
            throw std::invalid_argument("spacing components must be positive and finite");
    }
};

// Placement of a voxel grid in world space. origin is the world-mm position
// of the center of voxel (0,0,0); data is stored x fastest-varying.
struct GridGeometry {
    Index3 dims{1, 1, 1};
    Spacing spacing{};
    Vec3 origin{};

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(y) +
               static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
    }
    bool contains(int x, int y, int z) const {
        return x >= 0 && x < dims[0] && y >= 0 && y < dims[1] && z >= 0 && z < dims[2];
    }
    bool contains(const Index3& v) const { return contains(v[0], v[1], v[2]); }

    Vec3 voxel_to_world(const Vec3& v) const {
        return {origin.x + v.x * spacing.sx,
                origin.y + v.y * spacing.sy,
                origin.z + v.z * spacing.sz};
    }
    Vec3 world_to_voxel(const Vec3& p) const {
        return {(p.x - origin.x) / spacing.sx,
                (p.y - origin.y) / spacing.sy,
                (p.z - origin.z) / spacing.sz};
    }

    bool same_grid(const GridGeometry& o) const {
        return dims == o.dims && spacing.sx == o.spacing.sx &&
               spacing.sy == o.spacing.sy && spacing.sz == o.spacing.sz &&
               origin.x == o.origin.x && origin.y == o.origin.y && origin.z == o.origin.z;
    }

    void validate() const {
        if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1)
            throw std::invalid_argument("volume dims must be >= 1 per axis");
        spacing.validate();
    }
};

// Round half away from zero, the rounding convention used throughout.
inline long long round_half_away(double v) { return std::llround(v); }

inline Index3 round_voxel(const Vec3& p) {
    return {static_cast<int>(round_half_away(p.x)),
            static_cast<int>(round_half_away(p.y)),
            static_cast<int>(round_half_away(p.z))};
}

struct ScalarVolume {
    GridGeometry geom;
    std::vector<float> data;

    ScalarVolume() = default;
    explicit ScalarVolume(const GridGeometry& g, float fill = 0.0f)
        : geom(g), data(g.voxel_count(), fill) {
        geom.validate();
    }

    float& at(int x, int y, int z) { return data[geom.index(x, y, z)]; }
    float at(int x, int y, int z) const { return data[geom.index(x, y, z)]; }
};

struct BinaryVolume {
    GridGeometry geom;
    std::vector<std::uint8_t> data;

    BinaryVolume() = default;
    explicit BinaryVolume(const GridGeometry& g, std::uint8_t fill = 0)
        : geom(g), data(g.voxel_count(), fill) {
        geom.validate();
    }

    std::uint8_t& at(int x, int y, int z) { return data[geom.index(x, y, z)]; }
    std::uint8_t at(int x, int y, int z) const { return data[geom.index(x, y, z)]; }
    std::uint8_t at(const Index3& v) const { return data[geom.index(v[0], v[1], v[2])]; }
    void set(const Index3& v, std::uint8_t b) { data[geom.index(v[0], v[1], v[2])] = b; }

    std::size_t count() const {
        std::size_t n = 0;
        for (auto v : data) n += v;
        return n;
    }

    std::vector<Index3> foreground() const {
        std::vector<Index3> out;
        for (int z = 0; z < geom.dims[2]; ++z)
            for (int y = 0; y < geom.dims[1]; ++y)
                for (int x = 0; x < geom.dims[0]; ++x)
                    if (at(x, y, z)) out.push_back({x, y, z});
        return out;
    }
};

// The 26-neighborhood offsets in raster order (z, then y, then x), center excluded.
inline const std::vector<Index3>& neighbor_offsets_26() {
    static const std::vector<Index3> offsets = [] {
        std::vector<Index3> o;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    if (dx || dy || dz) o.push_back({dx, dy, dz});
        return o;
    }();
    return offsets;
}

// Deterministic slice-parallel loop: partitions [0, n) into contiguous chunks.
// Chunks write disjoint output so the result never depends on the thread count.
inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += workers) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace mctrace
