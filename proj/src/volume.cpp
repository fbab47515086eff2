#include "synthvol/volume.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <Eigen/LU>

#include "sampling.hpp"
#include "synthvol/errors.hpp"

namespace synthvol {

VoxelGrid VoxelGrid::make(Index3 dims, Vec3 spacing, Vec3 origin, Mat3 orientation) {
    VoxelGrid g{dims, spacing, origin, orientation};
    g.validate();
    return g;
}

void VoxelGrid::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] < 1) {
            throw ConfigError(fmt::format("grid: dims[{}] = {} must be >= 1", a, dims[a]));
        }
        if (!std::isfinite(spacing[a]) || spacing[a] <= 0.0) {
            throw ConfigError(fmt::format("grid: spacing[{}] = {} must be finite and > 0", a, spacing[a]));
        }
        if (!std::isfinite(origin[a])) {
            throw ConfigError(fmt::format("grid: origin[{}] is not finite", a));
        }
    }
    if (!orientation.allFinite()) {
        throw ConfigError("grid: orientation has non-finite entries");
    }
    const double err = (orientation.transpose() * orientation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (err > 1e-6) {
        throw ConfigError(fmt::format("grid: orientation columns not orthonormal (error {:.3g})", err));
    }
}

Index3 VoxelGrid::unravel(std::size_t idx) const {
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<std::int64_t>(idx % nx), static_cast<std::int64_t>((idx / nx) % ny),
            static_cast<std::int64_t>(idx / (nx * ny))};
}

Vec3 VoxelGrid::world(const Vec3& p) const {
    return origin + orientation * spacing.cwiseProduct(p);
}

Vec3 VoxelGrid::continuous_index(const Vec3& w) const {
    return (orientation.transpose() * (w - origin)).cwiseQuotient(spacing);
}

Mat4 VoxelGrid::index_to_world() const {
    Mat4 m = Mat4::Identity();
    m.block<3, 3>(0, 0) = orientation * spacing.asDiagonal();
    m.block<3, 1>(0, 3) = origin;
    return m;
}

Mat4 VoxelGrid::world_to_index() const {
    Mat4 m = Mat4::Identity();
    const Mat3 inv = spacing.cwiseInverse().asDiagonal() * orientation.transpose();
    m.block<3, 3>(0, 0) = inv;
    m.block<3, 1>(0, 3) = -inv * origin;
    return m;
}

Vec3 VoxelGrid::center_world() const {
    return world(Vec3(double(dims[0] - 1), double(dims[1] - 1), double(dims[2] - 1)) * 0.5);
}

std::pair<Vec3, Vec3> VoxelGrid::world_bounds() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int c = 0; c < 8; ++c) {
        const Vec3 corner((c & 1) ? double(dims[0] - 1) : 0.0, (c & 2) ? double(dims[1] - 1) : 0.0,
                          (c & 4) ? double(dims[2] - 1) : 0.0);
        const Vec3 w = world(corner);
        lo = lo.cwiseMin(w);
        hi = hi.cwiseMax(w);
    }
    return {lo, hi};
}

bool VoxelGrid::same_geometry(const VoxelGrid& o, double tol) const {
    return dims == o.dims && (spacing - o.spacing).cwiseAbs().maxCoeff() <= tol &&
           (origin - o.origin).cwiseAbs().maxCoeff() <= tol &&
           (orientation - o.orientation).cwiseAbs().maxCoeff() <= tol;
}

VoxelGrid VoxelGrid::crop(const Index3& offset, const Index3& size) const {
    for (int a = 0; a < 3; ++a) {
        if (offset[a] < 0 || size[a] < 1 || offset[a] + size[a] > dims[a]) {
            throw ShapeError(fmt::format("crop: axis {} window [{}, {}) outside [0, {})", a, offset[a],
                                         offset[a] + size[a], dims[a]));
        }
    }
    VoxelGrid g = *this;
    g.dims = size;
    g.origin = world(Vec3(double(offset[0]), double(offset[1]), double(offset[2])));
    return g;
}

// ---------------------------------------------------------------------------

Volume::Volume(VoxelGrid grid, int channels, std::vector<float> data) : grid_(std::move(grid)), channels_(channels) {
    if (channels < 1) {
        throw ShapeError("volume: channels must be >= 1");
    }
    if (data.size() != grid_.voxel_count() * static_cast<std::size_t>(channels)) {
        throw ShapeError(fmt::format("volume: payload has {} values, grid x channels needs {}", data.size(),
                                     grid_.voxel_count() * static_cast<std::size_t>(channels)));
    }
    for (float v : data) {
        if (!std::isfinite(v)) {
            throw DomainError("volume: payload contains non-finite values");
        }
    }
    data_ = std::make_shared<const std::vector<float>>(std::move(data));
}

Volume Volume::filled(const VoxelGrid& grid, int channels, float value) {
    return Volume(grid, channels, std::vector<float>(grid.voxel_count() * static_cast<std::size_t>(channels), value));
}

std::span<const float> Volume::data() const {
    if (!data_) {
        return {};
    }
    return {data_->data(), data_->size()};
}

std::span<const float> Volume::channel(int c) const {
    return data().subspan(static_cast<std::size_t>(c) * voxel_count(), voxel_count());
}

std::vector<float> Volume::copy_data() const {
    return data_ ? *data_ : std::vector<float>{};
}

LabelVolume::LabelVolume(VoxelGrid grid, std::vector<std::int32_t> labels) : grid_(std::move(grid)) {
    if (labels.size() != grid_.voxel_count()) {
        throw ShapeError(fmt::format("label volume: {} labels for a grid of {} voxels", labels.size(),
                                     grid_.voxel_count()));
    }
    std::int32_t max_label = 0;
    for (std::int32_t v : labels) {
        if (v < 0) {
            throw DomainError(fmt::format("label volume: negative label {}", v));
        }
        max_label = std::max(max_label, v);
    }
    if (max_label < (1 << 20)) {
        std::vector<char> seen(static_cast<std::size_t>(max_label) + 1, 0);
        for (std::int32_t v : labels) {
            seen[static_cast<std::size_t>(v)] = 1;
        }
        for (std::size_t l = 0; l < seen.size(); ++l) {
            if (seen[l]) {
                label_set_.push_back(static_cast<std::int32_t>(l));
            }
        }
    } else {
        label_set_ = labels;
        std::sort(label_set_.begin(), label_set_.end());
        label_set_.erase(std::unique(label_set_.begin(), label_set_.end()), label_set_.end());
    }
    labels_ = std::make_shared<const std::vector<std::int32_t>>(std::move(labels));
}

std::span<const std::int32_t> LabelVolume::labels() const {
    if (!labels_) {
        return {};
    }
    return {labels_->data(), labels_->size()};
}

bool LabelVolume::contains_label(std::int32_t label) const {
    return std::binary_search(label_set_.begin(), label_set_.end(), label);
}

// ---------------------------------------------------------------------------

float trilinear_sample(const Volume& vol, const Vec3& p, int channel, Boundary boundary) {
    const auto taps = detail::trilinear_taps(vol.grid(), p.x(), p.y(), p.z(), boundary);
    return static_cast<float>(detail::apply_taps(taps, vol.channel(channel).data()));
}

void trilinear_sample(const Volume& vol, const Vec3& p, std::span<float> out, Boundary boundary) {
    if (out.size() != static_cast<std::size_t>(vol.channels())) {
        throw ShapeError("trilinear_sample: output span does not match channel count");
    }
    const auto taps = detail::trilinear_taps(vol.grid(), p.x(), p.y(), p.z(), boundary);
    for (int c = 0; c < vol.channels(); ++c) {
        out[static_cast<std::size_t>(c)] = static_cast<float>(detail::apply_taps(taps, vol.channel(c).data()));
    }
}

std::vector<float> trilinear_sample_all(const Volume& vol, const Vec3& p, Boundary boundary) {
    std::vector<float> out(static_cast<std::size_t>(vol.channels()));
    trilinear_sample(vol, p, out, boundary);
    return out;
}

std::int32_t nearest_sample(const LabelVolume& labels, const Vec3& p) {
    const auto& g = labels.grid();
    return labels.at(detail::nearest_index(p.x(), g.dims[0]), detail::nearest_index(p.y(), g.dims[1]),
                     detail::nearest_index(p.z(), g.dims[2]));
}

namespace {

void check_resample_grids(const VoxelGrid& source, const VoxelGrid& target) {
    source.validate();
    target.validate();
    const auto [slo, shi] = source.world_bounds();
    const auto [tlo, thi] = target.world_bounds();
    // Half a voxel of slack: a single-voxel axis still covers its own cell.
    const Vec3 pad = source.spacing.cwiseMax(target.spacing) * 0.5;
    for (int a = 0; a < 3; ++a) {
        if (thi[a] + pad[a] < slo[a] || tlo[a] - pad[a] > shi[a]) {
            throw ShapeError(fmt::format("resample: target grid does not overlap source along world axis {}", a));
        }
    }
}

} // namespace

Volume resample(const Volume& vol, const VoxelGrid& target, Interpolation mode, Boundary boundary) {
    check_resample_grids(vol.grid(), target);
    if (vol.grid().same_geometry(target, 0.0)) {
        return vol;
    }
    const auto& src = vol.grid();
    const std::size_t n = target.voxel_count();
    const std::size_t src_n = src.voxel_count();
    const int channels = vol.channels();
    std::vector<float> out(n * static_cast<std::size_t>(channels));
    const detail::IndexToWorld i2w(target);
    const detail::WorldToIndex w2i(src);
    const float* in = vol.data().data();

#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < target.dims[2]; ++k) {
        for (std::int64_t j = 0; j < target.dims[1]; ++j) {
            for (std::int64_t i = 0; i < target.dims[0]; ++i) {
                double x, y, z, pi, pj, pk;
                i2w.apply(double(i), double(j), double(k), x, y, z);
                w2i.apply(x, y, z, pi, pj, pk);
                const std::size_t o = target.index(i, j, k);
                if (mode == Interpolation::nearest) {
                    const bool outside = pi < -0.5 || pj < -0.5 || pk < -0.5 || pi > double(src.dims[0]) - 0.5 ||
                                         pj > double(src.dims[1]) - 0.5 || pk > double(src.dims[2]) - 0.5;
                    const std::size_t s = src.index(detail::nearest_index(pi, src.dims[0]),
                                                    detail::nearest_index(pj, src.dims[1]),
                                                    detail::nearest_index(pk, src.dims[2]));
                    for (int c = 0; c < channels; ++c) {
                        out[std::size_t(c) * n + o] =
                            (outside && boundary == Boundary::zero) ? 0.0f : in[std::size_t(c) * src_n + s];
                    }
                } else {
                    const auto taps = detail::trilinear_taps(src, pi, pj, pk, boundary);
                    for (int c = 0; c < channels; ++c) {
                        out[std::size_t(c) * n + o] =
                            static_cast<float>(detail::apply_taps(taps, in + std::size_t(c) * src_n));
                    }
                }
            }
        }
    }
    return Volume(target, channels, std::move(out));
}

LabelVolume resample(const LabelVolume& labels, const VoxelGrid& target) {
    check_resample_grids(labels.grid(), target);
    const auto& src = labels.grid();
    std::vector<std::int32_t> out(target.voxel_count());
    const detail::IndexToWorld i2w(target);
    const detail::WorldToIndex w2i(src);
    const auto in = labels.labels();

#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < target.dims[2]; ++k) {
        for (std::int64_t j = 0; j < target.dims[1]; ++j) {
            for (std::int64_t i = 0; i < target.dims[0]; ++i) {
                double x, y, z, pi, pj, pk;
                i2w.apply(double(i), double(j), double(k), x, y, z);
                w2i.apply(x, y, z, pi, pj, pk);
                out[target.index(i, j, k)] =
                    in[src.index(detail::nearest_index(pi, src.dims[0]), detail::nearest_index(pj, src.dims[1]),
                                 detail::nearest_index(pk, src.dims[2]))];
            }
        }
    }
    return LabelVolume(target, std::move(out));
}

// ---------------------------------------------------------------------------

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) {
        return {1.0};
    }
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int t = -radius; t <= radius; ++t) {
        const double w = std::exp(-0.5 * double(t) * double(t) / (sigma * sigma));
        k[static_cast<std::size_t>(t + radius)] = w;
        sum += w;
    }
    for (double& w : k) {
        w /= sum;
    }
    return k;
}

namespace {

// One separable pass along `axis` of a single plane, edges replicated.
void blur_axis(const float* in, float* out, const Index3& dims, int axis, const std::vector<double>& kernel) {
    const std::int64_t radius = static_cast<std::int64_t>(kernel.size() / 2);
    const std::int64_t n = dims[axis];
    const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
    // Lines are enumerated by the two remaining axes.
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    const std::int64_t stride1 = a1 == 0 ? 1 : dims[0];
    const std::int64_t stride2 = a2 == 1 ? dims[0] : dims[0] * dims[1];
    const std::int64_t lines = dims[a1] * dims[a2];

#pragma omp parallel
    {
        std::vector<double> line(static_cast<std::size_t>(n + 2 * radius));
#pragma omp for schedule(static)
        for (std::int64_t l = 0; l < lines; ++l) {
            const std::int64_t base = (l % dims[a1]) * stride1 + (l / dims[a1]) * stride2;
            for (std::int64_t t = -radius; t < n + radius; ++t) {
                const std::int64_t s = std::clamp<std::int64_t>(t, 0, n - 1);
                line[static_cast<std::size_t>(t + radius)] = in[base + s * stride];
            }
            for (std::int64_t p = 0; p < n; ++p) {
                double acc = 0.0;
                const double* src = line.data() + p;
                for (std::size_t q = 0; q < kernel.size(); ++q) {
                    acc += kernel[q] * src[q];
                }
                out[base + p * stride] = static_cast<float>(acc);
            }
        }
    }
}

} // namespace

Volume gaussian_blur(const Volume& vol, const std::array<double, 3>& sigma) {
    for (double s : sigma) {
        if (!(s >= 0.0) || !std::isfinite(s)) {
            throw ConfigError("gaussian_blur: sigma must be finite and >= 0");
        }
    }
    if (sigma[0] == 0.0 && sigma[1] == 0.0 && sigma[2] == 0.0) {
        return vol;
    }
    const std::size_t n = vol.voxel_count();
    std::vector<float> cur = vol.copy_data();
    std::vector<float> tmp(cur.size());
    for (int axis = 0; axis < 3; ++axis) {
        if (sigma[static_cast<std::size_t>(axis)] == 0.0 || vol.grid().dims[axis] == 1) {
            continue;
        }
        const auto kernel = gaussian_kernel(sigma[static_cast<std::size_t>(axis)]);
        for (int c = 0; c < vol.channels(); ++c) {
            blur_axis(cur.data() + std::size_t(c) * n, tmp.data() + std::size_t(c) * n, vol.grid().dims, axis, kernel);
        }
        cur.swap(tmp);
    }
    return Volume(vol.grid(), vol.channels(), std::move(cur));
}

Volume extract_channel(const Volume& vol, int c) {
    if (c < 0 || c >= vol.channels()) {
        throw ShapeError(fmt::format("extract_channel: channel {} out of range", c));
    }
    const auto ch = vol.channel(c);
    return Volume(vol.grid(), 1, std::vector<float>(ch.begin(), ch.end()));
}

Volume to_volume(const LabelVolume& labels) {
    const auto in = labels.labels();
    std::vector<float> out(in.size());
    std::transform(in.begin(), in.end(), out.begin(), [](std::int32_t v) { return static_cast<float>(v); });
    return Volume(labels.grid(), 1, std::move(out));
}

Volume crop(const Volume& vol, const Index3& offset, const Index3& size) {
    const VoxelGrid g = vol.grid().crop(offset, size);
    const std::size_t n = g.voxel_count();
    std::vector<float> out(n * static_cast<std::size_t>(vol.channels()));
    for (int c = 0; c < vol.channels(); ++c) {
        const auto in = vol.channel(c);
        for (std::int64_t k = 0; k < size[2]; ++k) {
            for (std::int64_t j = 0; j < size[1]; ++j) {
                const std::size_t s = vol.grid().index(offset[0], offset[1] + j, offset[2] + k);
                std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(s), size[0],
                            out.begin() + static_cast<std::ptrdiff_t>(std::size_t(c) * n + g.index(0, j, k)));
            }
        }
    }
    return Volume(g, vol.channels(), std::move(out));
}

LabelVolume crop(const LabelVolume& labels, const Index3& offset, const Index3& size) {
    const VoxelGrid g = labels.grid().crop(offset, size);
    std::vector<std::int32_t> out(g.voxel_count());
    const auto in = labels.labels();
    for (std::int64_t k = 0; k < size[2]; ++k) {
        for (std::int64_t j = 0; j < size[1]; ++j) {
            const std::size_t s = labels.grid().index(offset[0], offset[1] + j, offset[2] + k);
            std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(s), size[0],
                        out.begin() + static_cast<std::ptrdiff_t>(g.index(0, j, k)));
        }
    }
    return LabelVolume(g, std::move(out));
}

} // namespace synthvol
