#pragma once

// Inner-loop interpolation kernels shared by the public sampling API and the
// warping code. Not installed.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "synthvol/volume.hpp"

namespace synthvol::detail {

struct AxisTap {
    std::int64_t i0 = 0;
    std::int64_t i1 = 0;
    double w0 = 1.0;
    double w1 = 0.0;
};

inline AxisTap axis_tap(double p, std::int64_t n, Boundary boundary) {
    AxisTap t;
    if (boundary == Boundary::clamp) {
        if (n == 1) {
            return t;
        }
        const double x = std::clamp(p, 0.0, double(n - 1));
        std::int64_t i0 = static_cast<std::int64_t>(std::floor(x));
        i0 = std::min(i0, n - 2);
        const double f = x - double(i0);
        t.i0 = i0;
        t.i1 = i0 + 1;
        t.w0 = 1.0 - f;
        t.w1 = f;
        return t;
    }
    // Zero fill: taps outside the lattice get weight 0.
    const double fl = std::floor(p);
    const std::int64_t i0 = static_cast<std::int64_t>(fl);
    const double f = p - fl;
    t.i0 = i0;
    t.i1 = i0 + 1;
    t.w0 = (i0 >= 0 && i0 < n) ? 1.0 - f : 0.0;
    t.w1 = (i0 + 1 >= 0 && i0 + 1 < n) ? f : 0.0;
    t.i0 = std::clamp<std::int64_t>(t.i0, 0, n - 1);
    t.i1 = std::clamp<std::int64_t>(t.i1, 0, n - 1);
    return t;
}

struct Trilinear {
    std::size_t idx[8];
    double w[8];
};

inline Trilinear trilinear_taps(const VoxelGrid& g, double px, double py, double pz,
                                Boundary boundary) {
    const AxisTap ax = axis_tap(px, g.dims[0], boundary);
    const AxisTap ay = axis_tap(py, g.dims[1], boundary);
    const AxisTap az = axis_tap(pz, g.dims[2], boundary);
    Trilinear t;
    const std::int64_t xs[2] = {ax.i0, ax.i1};
    const std::int64_t ys[2] = {ay.i0, ay.i1};
    const std::int64_t zs[2] = {az.i0, az.i1};
    const double wx[2] = {ax.w0, ax.w1};
    const double wy[2] = {ay.w0, ay.w1};
    const double wz[2] = {az.w0, az.w1};
    int n = 0;
    for (int c = 0; c < 2; ++c) {
        for (int b = 0; b < 2; ++b) {
            for (int a = 0; a < 2; ++a) {
                t.idx[n] = g.index(xs[a], ys[b], zs[c]);
                t.w[n] = wx[a] * wy[b] * wz[c];
                ++n;
            }
        }
    }
    return t;
}

inline double apply_taps(const Trilinear& t, const float* plane) {
    double acc = 0.0;
    for (int n = 0; n < 8; ++n) {
        if (t.w[n] != 0.0) {
            acc += t.w[n] * double(plane[t.idx[n]]);
        }
    }
    return acc;
}

// Ties resolve toward the lower index: round-half-down, then clamp.
inline std::int64_t nearest_index(double p, std::int64_t n) {
    const std::int64_t i = static_cast<std::int64_t>(std::ceil(p - 0.5));
    return std::clamp<std::int64_t>(i, 0, n - 1);
}

// Affine map from world coordinates to continuous voxel index, unrolled.
struct WorldToIndex {
    double m[3][4];

    explicit WorldToIndex(const VoxelGrid& g) {
        const Mat4 w2i = g.world_to_index();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) {
                m[r][c] = w2i(r, c);
            }
        }
    }
    void apply(double x, double y, double z, double& i, double& j, double& k) const {
        i = m[0][0] * x + m[0][1] * y + m[0][2] * z + m[0][3];
        j = m[1][0] * x + m[1][1] * y + m[1][2] * z + m[1][3];
        k = m[2][0] * x + m[2][1] * y + m[2][2] * z + m[2][3];
    }
};

struct IndexToWorld {
    double m[3][4];

    explicit IndexToWorld(const VoxelGrid& g) {
        const Mat4 i2w = g.index_to_world();
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 4; ++c) {
                m[r][c] = i2w(r, c);
            }
        }
    }
    void apply(double i, double j, double k, double& x, double& y, double& z) const {
        x = m[0][0] * i + m[0][1] * j + m[0][2] * k + m[0][3];
        y = m[1][0] * i + m[1][1] * j + m[1][2] * k + m[1][3];
        z = m[2][0] * i + m[2][1] * j + m[2][2] * k + m[2][3];
    }
};

} // namespace synthvol::detail
