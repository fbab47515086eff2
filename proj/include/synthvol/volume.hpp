#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace synthvol {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Index3 = std::array<std::int64_t, 3>;

// Regular lattice placed in world space (mm):
//   world(i,j,k) = origin + orientation * diag(spacing) * (i,j,k)
// Axis 0 is the fastest varying axis of every voxel buffer.
struct VoxelGrid {
    Index3 dims{1, 1, 1};
    Vec3 spacing{1.0, 1.0, 1.0};
    Vec3 origin{0.0, 0.0, 0.0};
    Mat3 orientation = Mat3::Identity();

    static VoxelGrid make(Index3 dims, Vec3 spacing = Vec3::Ones(), Vec3 origin = Vec3::Zero(),
                          Mat3 orientation = Mat3::Identity());

    // Throws ConfigError when dims < 1, spacing <= 0, non-finite values or
    // non-orthonormal orientation (tolerance 1e-6).
    void validate() const;

    std::size_t voxel_count() const {
        return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
               static_cast<std::size_t>(dims[2]);
    }
    std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return static_cast<std::size_t>(i + dims[0] * (j + dims[1] * k));
    }
    Index3 unravel(std::size_t idx) const;

    Vec3 world(const Vec3& continuous_index) const;
    Vec3 world(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return world(Vec3(double(i), double(j), double(k)));
    }
    Vec3 continuous_index(const Vec3& world_point) const;

    // 4x4 homogeneous voxel-index -> world matrix and its inverse.
    Mat4 index_to_world() const;
    Mat4 world_to_index() const;

    Vec3 center_world() const;
    // Axis-aligned world bounding box of the voxel centres.
    std::pair<Vec3, Vec3> world_bounds() const;

    bool same_geometry(const VoxelGrid& other, double tol = 1e-6) const;

    // Sub-lattice starting at `offset` with `size` voxels per axis.
    VoxelGrid crop(const Index3& offset, const Index3& size) const;
};

// Dense real-valued volume, `channels` planes of grid.voxel_count() floats.
// Layout is channel-planar: data[c * voxel_count + grid.index(i,j,k)].
// Payload is immutable and shared between copies.
class Volume {
public:
    Volume() = default;
    // Throws ShapeError on size mismatch and DomainError on non-finite data.
    Volume(VoxelGrid grid, int channels, std::vector<float> data);

    static Volume filled(const VoxelGrid& grid, int channels, float value);

    const VoxelGrid& grid() const { return grid_; }
    int channels() const { return channels_; }
    std::size_t voxel_count() const { return grid_.voxel_count(); }
    bool empty() const { return !data_; }

    std::span<const float> data() const;
    std::span<const float> channel(int c) const;

    float at(std::int64_t i, std::int64_t j, std::int64_t k, int c = 0) const {
        return (*data_)[static_cast<std::size_t>(c) * voxel_count() + grid_.index(i, j, k)];
    }

    // Mutable copy of the payload, for building a derived volume.
    std::vector<float> copy_data() const;

private:
    VoxelGrid grid_;
    int channels_ = 0;
    std::shared_ptr<const std::vector<float>> data_;
};

// Integer label map. Label 0 is background.
class LabelVolume {
public:
    LabelVolume() = default;
    // Throws DomainError on negative labels, ShapeError on size mismatch.
    LabelVolume(VoxelGrid grid, std::vector<std::int32_t> labels);

    const VoxelGrid& grid() const { return grid_; }
    std::size_t voxel_count() const { return grid_.voxel_count(); }
    bool empty() const { return !labels_; }

    std::span<const std::int32_t> labels() const;
    // Sorted distinct values present in labels().
    const std::vector<std::int32_t>& label_set() const { return label_set_; }
    bool contains_label(std::int32_t label) const;

    std::int32_t at(std::int64_t i, std::int64_t j, std::int64_t k) const {
        return (*labels_)[grid_.index(i, j, k)];
    }

private:
    VoxelGrid grid_;
    std::shared_ptr<const std::vector<std::int32_t>> labels_;
    std::vector<std::int32_t> label_set_;
};

enum class Boundary { clamp, zero };
enum class Interpolation { trilinear, nearest };

// Trilinear interpolation at continuous voxel coordinate p.
float trilinear_sample(const Volume& vol, const Vec3& p, int channel = 0,
                       Boundary boundary = Boundary::clamp);
// All channels at once; out.size() must equal vol.channels().
void trilinear_sample(const Volume& vol, const Vec3& p, std::span<float> out,
                      Boundary boundary = Boundary::clamp);
std::vector<float> trilinear_sample_all(const Volume& vol, const Vec3& p,
                                        Boundary boundary = Boundary::clamp);

// Nearest lattice node, ties broken toward the lower index. Out-of-domain
// points are clamped to the edge so the result is always in label_set().
std::int32_t nearest_sample(const LabelVolume& labels, const Vec3& p);

// Pull values onto `target` through world-space alignment of both grids.
Volume resample(const Volume& vol, const VoxelGrid& target,
                Interpolation mode = Interpolation::trilinear,
                Boundary boundary = Boundary::clamp);
LabelVolume resample(const LabelVolume& labels, const VoxelGrid& target);

// Separable Gaussian filter, sigma in voxels per axis. Kernels are truncated
// at +-ceil(4 sigma) and renormalised; edges replicate.
Volume gaussian_blur(const Volume& vol, const std::array<double, 3>& sigma);

// Normalised 1-D kernel used by gaussian_blur (exposed for tests).
std::vector<double> gaussian_kernel(double sigma);

// Channel `c` of a volume as a standalone scalar volume.
Volume extract_channel(const Volume& vol, int c);
// Float view of a label map.
Volume to_volume(const LabelVolume& labels);

// Sub-volume on grid.crop(offset, size).
Volume crop(const Volume& vol, const Index3& offset, const Index3& size);
LabelVolume crop(const LabelVolume& labels, const Index3& offset, const Index3& size);

} // namespace synthvol
