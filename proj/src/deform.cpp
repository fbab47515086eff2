#include "synthvol/deform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <fmt/format.h>

#include "sampling.hpp"
#include "synthvol/errors.hpp"
#include "synthvol/lattice.hpp"

namespace synthvol {

namespace {

void check_range(const Range& r, const char* name) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
        throw ConfigError(fmt::format("{}: range [{}, {}] must be finite with lo <= hi", name, r.lo, r.hi));
    }
}

// Two passes of a centred box of width 2r+1 along `axis` of every channel
// (running sums, edges replicated), i.e. a triangle filter of half-width 2r.
void box_smooth_twice(std::vector<float>& data, const Index3& dims, int channels, int axis, std::int64_t r) {
    const std::int64_t n = dims[axis];
    if (n == 1 || r < 1) {
        return;
    }
    const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    const std::int64_t stride1 = a1 == 0 ? 1 : dims[0];
    const std::int64_t stride2 = a2 == 1 ? dims[0] : dims[0] * dims[1];
    const std::int64_t lines = dims[a1] * dims[a2];
    const std::int64_t voxels = dims[0] * dims[1] * dims[2];
    const double inv = 1.0 / double(2 * r + 1);

#pragma omp parallel
    {
        std::vector<double> line(static_cast<std::size_t>(n));
        std::vector<double> next(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
        for (std::int64_t l = 0; l < lines * channels; ++l) {
            const std::int64_t c = l / lines;
            const std::int64_t m = l % lines;
            const std::int64_t base = c * voxels + (m % dims[a1]) * stride1 + (m / dims[a1]) * stride2;
            for (std::int64_t t = 0; t < n; ++t) {
                line[std::size_t(t)] = data[std::size_t(base + t * stride)];
            }
            for (int pass = 0; pass < 2; ++pass) {
                const auto at = [&](std::int64_t t) { return line[std::size_t(std::clamp<std::int64_t>(t, 0, n - 1))]; };
                double sum = 0.0;
                for (std::int64_t t = -r; t <= r; ++t) {
                    sum += at(t);
                }
                for (std::int64_t t = 0; t < n; ++t) {
                    next[std::size_t(t)] = sum * inv;
                    sum += at(t + r + 1) - at(t - r);
                }
                line.swap(next);
            }
            for (std::int64_t t = 0; t < n; ++t) {
                data[std::size_t(base + t * stride)] = static_cast<float>(line[std::size_t(t)]);
            }
        }
    }
}

Mat4 translation(const Vec3& t) {
    Mat4 m = Mat4::Identity();
    m.block<3, 1>(0, 3) = t;
    return m;
}

Mat4 linear(const Mat3& a) {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = a;
    return m;
}

Mat3 rotation_x(double deg) {
    const double r = deg * std::numbers::pi / 180.0;
    Mat3 m;
    m << 1, 0, 0, 0, std::cos(r), -std::sin(r), 0, std::sin(r), std::cos(r);
    return m;
}

Mat3 rotation_y(double deg) {
    const double r = deg * std::numbers::pi / 180.0;
    Mat3 m;
    m << std::cos(r), 0, std::sin(r), 0, 1, 0, -std::sin(r), 0, std::cos(r);
    return m;
}

Mat3 rotation_z(double deg) {
    const double r = deg * std::numbers::pi / 180.0;
    Mat3 m;
    m << std::cos(r), -std::sin(r), 0, std::sin(r), std::cos(r), 0, 0, 0, 1;
    return m;
}

void require_vector_field(const Volume& v, const char* what) {
    if (v.channels() != 3) {
        throw ShapeError(fmt::format("{}: expected a 3-channel field, got {} channels", what, v.channels()));
    }
}

} // namespace

void AffineRanges::validate() const {
    check_range(rotation_deg, "deformation.affine.rotation_deg");
    check_range(scaling, "deformation.affine.scaling");
    check_range(shearing, "deformation.affine.shearing");
    check_range(translation_mm, "deformation.affine.translation_mm");
    if (scaling.lo <= 0.0) {
        throw ConfigError("deformation.affine.scaling: factors must be > 0");
    }
}

void DeformationRanges::validate() const {
    affine.validate();
    check_range(svf_amplitude, "deformation.svf.amplitude_mm");
    if (svf_amplitude.lo < 0.0) {
        throw ConfigError("deformation.svf.amplitude_mm: amplitude must be >= 0");
    }
    if (!(svf_control_spacing > 0.0)) {
        throw ConfigError("deformation.svf.control_spacing_mm: must be > 0");
    }
    if (integration_steps < 1) {
        throw ConfigError("deformation.svf.integration_steps: must be >= 1");
    }
}

Mat4 AffineParams::matrix() const {
    Mat3 shear = Mat3::Identity();
    shear(0, 1) = shearing[0];
    shear(0, 2) = shearing[1];
    shear(1, 2) = shearing[2];
    const Mat3 lin = rotation_z(rotation_deg[2]) * rotation_y(rotation_deg[1]) * rotation_x(rotation_deg[0]) * shear *
                     Mat3(scaling.asDiagonal());
    return translation(center) * translation(translation_mm) * linear(lin) * translation(-center);
}

AffineParams AffineParams::identity(const Vec3& center) {
    AffineParams p;
    p.center = center;
    return p;
}

AffineParams sample_affine(Rng& rng, const AffineRanges& ranges, const Vec3& center) {
    ranges.validate();
    AffineParams p;
    p.center = center;
    for (int a = 0; a < 3; ++a) {
        p.rotation_deg[a] = rng.uniform(ranges.rotation_deg.lo, ranges.rotation_deg.hi);
    }
    for (int a = 0; a < 3; ++a) {
        p.scaling[a] = rng.uniform(ranges.scaling.lo, ranges.scaling.hi);
    }
    for (int a = 0; a < 3; ++a) {
        p.shearing[a] = rng.uniform(ranges.shearing.lo, ranges.shearing.hi);
    }
    for (int a = 0; a < 3; ++a) {
        p.translation_mm[a] = rng.uniform(ranges.translation_mm.lo, ranges.translation_mm.hi);
    }
    if (std::abs(p.matrix().determinant()) <= 1e-9) {
        throw ConfigError("sample_affine: drawn matrix is singular");
    }
    return p;
}

VelocityField sample_svf(const Rng& rng, const VoxelGrid& grid, double control_spacing, double amplitude) {
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
        throw ConfigError(fmt::format("sample_svf: amplitude {} must be finite and >= 0", amplitude));
    }
    for (int a = 0; a < 3; ++a) {
        if (control_spacing < 2.0 * grid.spacing[a]) {
            throw ConfigError(fmt::format("sample_svf: control spacing {} mm is below twice the voxel spacing {} mm",
                                          control_spacing, grid.spacing[a]));
        }
    }
    VelocityField v;
    v.grid = grid;
    v.control_spacing = control_spacing;
    v.amplitude = amplitude;
    if (amplitude == 0.0) {
        v.vectors = Volume::filled(grid, 3, 0.0f);
        return v;
    }
    std::vector<float> smooth = lattice_gaussian_field(rng, grid, control_spacing, 3).copy_data();
    for (int a = 0; a < 3; ++a) {
        const auto r = static_cast<std::int64_t>(std::lround(control_spacing / (2.0 * grid.spacing[a])));
        box_smooth_twice(smooth, grid.dims, 3, a, r);
    }
    const Volume raw(grid, 3, std::move(smooth));
    const std::size_t n = grid.voxel_count();
    const float* x = raw.channel(0).data();
    const float* y = raw.channel(1).data();
    const float* z = raw.channel(2).data();
    double max_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = std::sqrt(double(x[i]) * x[i] + double(y[i]) * y[i] + double(z[i]) * z[i]);
        max_norm = std::max(max_norm, m);
    }
    if (max_norm == 0.0) {
        v.vectors = Volume::filled(grid, 3, 0.0f);
        return v;
    }
    const double scale = amplitude / max_norm;
    std::vector<float> out = raw.copy_data();
    for (float& f : out) {
        f = static_cast<float>(double(f) * scale);
    }
    v.vectors = Volume(grid, 3, std::move(out));
    return v;
}

Volume compose_displacements(const Volume& a, const Volume& b) {
    require_vector_field(a, "compose_displacements");
    require_vector_field(b, "compose_displacements");
    if (!a.grid().same_geometry(b.grid())) {
        throw ShapeError("compose_displacements: fields live on different grids");
    }
    const VoxelGrid& g = a.grid();
    const std::size_t n = g.voxel_count();
    // Displacements are in mm; map them to index offsets.
    const Mat3 to_index = g.spacing.cwiseInverse().asDiagonal() * g.orientation.transpose();
    const float* a_planes[3] = {a.channel(0).data(), a.channel(1).data(), a.channel(2).data()};
    const float* b_planes[3] = {b.channel(0).data(), b.channel(1).data(), b.channel(2).data()};
    std::vector<float> out(3 * n);

#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < g.dims[2]; ++k) {
        for (std::int64_t j = 0; j < g.dims[1]; ++j) {
            for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                const std::size_t o = g.index(i, j, k);
                const Vec3 d(b_planes[0][o], b_planes[1][o], b_planes[2][o]);
                const Vec3 p = Vec3(double(i), double(j), double(k)) + to_index * d;
                const auto ax = detail::axis_tap(p.x(), g.dims[0], Boundary::clamp);
                const auto ay = detail::axis_tap(p.y(), g.dims[1], Boundary::clamp);
                const auto az = detail::axis_tap(p.z(), g.dims[2], Boundary::clamp);
                const std::size_t base = g.index(ax.i0, ay.i0, az.i0);
                const std::size_t sx = std::size_t(ax.i1 - ax.i0);
                const std::size_t sy = std::size_t(ay.i1 - ay.i0) * std::size_t(g.dims[0]);
                const std::size_t sz = std::size_t(az.i1 - az.i0) * std::size_t(g.dims[0] * g.dims[1]);
                for (int c = 0; c < 3; ++c) {
                    const float* q = a_planes[c] + base;
                    const double c00 = ax.w0 * q[0] + ax.w1 * q[sx];
                    const double c10 = ax.w0 * q[sy] + ax.w1 * q[sy + sx];
                    const double c01 = ax.w0 * q[sz] + ax.w1 * q[sz + sx];
                    const double c11 = ax.w0 * q[sz + sy] + ax.w1 * q[sz + sy + sx];
                    const double v = az.w0 * (ay.w0 * c00 + ay.w1 * c10) + az.w1 * (ay.w0 * c01 + ay.w1 * c11);
                    out[std::size_t(c) * n + o] = static_cast<float>(d[c] + v);
                }
            }
        }
    }
    return Volume(g, 3, std::move(out));
}

Volume integrate_svf(const VelocityField& v, int steps) {
    if (steps < 1) {
        throw ConfigError("integrate_svf: steps must be >= 1");
    }
    require_vector_field(v.vectors, "integrate_svf");
    const double scale = std::ldexp(1.0, -steps);
    std::vector<float> small = v.vectors.copy_data();
    bool all_zero = true;
    for (float& f : small) {
        f = static_cast<float>(double(f) * scale);
        all_zero = all_zero && f == 0.0f;
    }
    Volume u(v.vectors.grid(), 3, std::move(small));
    if (all_zero) {
        return u;
    }
    for (int s = 0; s < steps; ++s) {
        u = compose_displacements(u, u);
    }
    return u;
}

DeformationField identity_deformation(const VoxelGrid& grid) {
    return compose(Volume::filled(grid, 3, 0.0f), AffineParams::identity(grid.center_world()), grid);
}

DeformationField compose(const Volume& u, const AffineParams& affine, const VoxelGrid& grid) {
    require_vector_field(u, "compose");
    if (!u.grid().same_geometry(grid)) {
        throw ShapeError("compose: displacement is not defined on the target grid");
    }
    const std::size_t n = grid.voxel_count();
    const Mat4 m = affine.matrix();
    const detail::IndexToWorld i2w(grid);
    const float* planes[3] = {u.channel(0).data(), u.channel(1).data(), u.channel(2).data()};
    std::vector<float> out(3 * n);

#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < grid.dims[2]; ++k) {
        for (std::int64_t j = 0; j < grid.dims[1]; ++j) {
            for (std::int64_t i = 0; i < grid.dims[0]; ++i) {
                const std::size_t o = grid.index(i, j, k);
                double x, y, z;
                i2w.apply(double(i), double(j), double(k), x, y, z);
                x += planes[0][o];
                y += planes[1][o];
                z += planes[2][o];
                for (int r = 0; r < 3; ++r) {
                    out[std::size_t(r) * n + o] =
                        static_cast<float>(m(r, 0) * x + m(r, 1) * y + m(r, 2) * z + m(r, 3));
                }
            }
        }
    }
    DeformationField phi;
    phi.grid = grid;
    phi.coords = Volume(grid, 3, std::move(out));
    phi.provenance.affine = affine;
    return phi;
}

Volume warp_image(const Volume& vol, const DeformationField& phi, Boundary boundary) {
    const VoxelGrid& g = phi.grid;
    const VoxelGrid& src = vol.grid();
    const std::size_t n = g.voxel_count();
    const std::size_t src_n = src.voxel_count();
    const int channels = vol.channels();
    const detail::WorldToIndex w2i(src);
    const float* c[3] = {phi.coords.channel(0).data(), phi.coords.channel(1).data(), phi.coords.channel(2).data()};
    const float* in = vol.data().data();
    std::vector<float> out(n * static_cast<std::size_t>(channels));

#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < static_cast<std::int64_t>(n); ++o) {
        double pi, pj, pk;
        w2i.apply(c[0][o], c[1][o], c[2][o], pi, pj, pk);
        const auto taps = detail::trilinear_taps(src, pi, pj, pk, boundary);
        for (int ch = 0; ch < channels; ++ch) {
            out[std::size_t(ch) * n + std::size_t(o)] =
                static_cast<float>(detail::apply_taps(taps, in + std::size_t(ch) * src_n));
        }
    }
    return Volume(g, channels, std::move(out));
}

LabelVolume warp_labels(const LabelVolume& labels, const DeformationField& phi) {
    const VoxelGrid& g = phi.grid;
    const VoxelGrid& src = labels.grid();
    const std::size_t n = g.voxel_count();
    const detail::WorldToIndex w2i(src);
    const float* c[3] = {phi.coords.channel(0).data(), phi.coords.channel(1).data(), phi.coords.channel(2).data()};
    const auto in = labels.labels();
    std::vector<std::int32_t> out(n);

#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < static_cast<std::int64_t>(n); ++o) {
        double pi, pj, pk;
        w2i.apply(c[0][o], c[1][o], c[2][o], pi, pj, pk);
        out[std::size_t(o)] = in[src.index(detail::nearest_index(pi, src.dims[0]),
                                           detail::nearest_index(pj, src.dims[1]),
                                           detail::nearest_index(pk, src.dims[2]))];
    }
    return LabelVolume(g, std::move(out));
}

Volume jacobian_determinant(const DeformationField& phi) {
    const VoxelGrid& g = phi.grid;
    const std::size_t n = g.voxel_count();
    const Mat4 i2w = g.index_to_world();
    const Mat3 step = i2w.block<3, 3>(0, 0); // d world / d index
    const double step_det = step.determinant();
    const float* c[3] = {phi.coords.channel(0).data(), phi.coords.channel(1).data(), phi.coords.channel(2).data()};
    std::vector<float> out(n);

#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < g.dims[2]; ++k) {
        for (std::int64_t j = 0; j < g.dims[1]; ++j) {
            for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                const std::int64_t idx[3] = {i, j, k};
                Mat3 d;
                for (int a = 0; a < 3; ++a) {
                    const std::int64_t na = g.dims[static_cast<std::size_t>(a)];
                    if (na == 1) {
                        d.col(a) = step.col(a);
                        continue;
                    }
                    std::int64_t lo[3] = {i, j, k};
                    std::int64_t hi[3] = {i, j, k};
                    lo[a] = std::max<std::int64_t>(idx[a] - 1, 0);
                    hi[a] = std::min<std::int64_t>(idx[a] + 1, na - 1);
                    const double h = double(hi[a] - lo[a]);
                    const std::size_t ilo = g.index(lo[0], lo[1], lo[2]);
                    const std::size_t ihi = g.index(hi[0], hi[1], hi[2]);
                    for (int r = 0; r < 3; ++r) {
                        d(r, a) = (double(c[r][ihi]) - double(c[r][ilo])) / h;
                    }
                }
                out[g.index(i, j, k)] = static_cast<float>(d.determinant() / step_det);
            }
        }
    }
    return Volume(g, 1, std::move(out));
}

DeformationField sample_deformation(const Rng& rng, const DeformationRanges& ranges, const VoxelGrid& grid,
                                    const Vec3& center) {
    ranges.validate();
    Rng affine_rng = rng.derive("affine");
    const AffineParams affine = sample_affine(affine_rng, ranges.affine, center);
    Rng amp_rng = rng.derive("svf-amplitude");
    const double amplitude = amp_rng.uniform(ranges.svf_amplitude.lo, ranges.svf_amplitude.hi);
    const Rng svf_rng = rng.derive("svf");
    const VelocityField v = sample_svf(svf_rng, grid, ranges.svf_control_spacing, amplitude);
    const Volume u = integrate_svf(v, ranges.integration_steps);
    DeformationField phi = compose(u, affine, grid);
    phi.provenance.svf_key = svf_rng.key();
    phi.provenance.svf_amplitude = amplitude;
    phi.provenance.svf_control_spacing = ranges.svf_control_spacing;
    phi.provenance.integration_steps = ranges.integration_steps;
    return phi;
}

} // namespace synthvol
