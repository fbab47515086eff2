#pragma once

#include <cstdint>

#include "synthvol/range.hpp"
#include "synthvol/rng.hpp"
#include "synthvol/volume.hpp"

namespace synthvol {

struct AffineRanges {
    Range rotation_deg{-15.0, 15.0};
    Range scaling{0.85, 1.15};
    Range shearing{-0.012, 0.012};
    Range translation_mm{-15.0, 15.0};

    // Throws ConfigError for lo > hi or non-positive scaling.
    void validate() const;
};

// Random affine factors. The 4x4 matrix is assembled about `center` (mm) as
//   T(center) * T(translation) * Rz * Ry * Rx * Shear * Scale * T(-center)
// with Shear = [[1, sh0, sh1], [0, 1, sh2], [0, 0, 1]].
struct AffineParams {
    Vec3 rotation_deg = Vec3::Zero();
    Vec3 scaling = Vec3::Ones();
    Vec3 shearing = Vec3::Zero();
    Vec3 translation_mm = Vec3::Zero();
    Vec3 center = Vec3::Zero();

    Mat4 matrix() const;
    static AffineParams identity(const Vec3& center = Vec3::Zero());
};

AffineParams sample_affine(Rng& rng, const AffineRanges& ranges, const Vec3& center);

// Stationary velocity field in mm per unit integration time.
struct VelocityField {
    VoxelGrid grid;
    Volume vectors; // 3 channels
    double control_spacing = 0.0;
    double amplitude = 0.0;
};

// Gaussian vectors on a lattice of spacing `control_spacing`, trilinearly
// upsampled to `grid`, smoothed with a separable triangle filter of
// half-width ~control_spacing (removes the gradient kinks on the lattice
// planes) and rescaled so that the largest vector norm equals `amplitude`.
// Requires control_spacing >= 2 * every voxel spacing.
VelocityField sample_svf(const Rng& rng, const VoxelGrid& grid, double control_spacing, double amplitude);

// Returns u(x) = b(x) + a(x + b(x)), i.e. the displacement of (x -> x + a) after (x -> x + b).
// Both fields are 3-channel mm displacements on the same grid.
Volume compose_displacements(const Volume& a, const Volume& b);

// Scaling and squaring: v / 2^steps is composed with itself `steps` times.
Volume integrate_svf(const VelocityField& v, int steps = 7);

struct DeformationProvenance {
    AffineParams affine;
    std::uint64_t svf_key = 0;
    double svf_amplitude = 0.0;
    double svf_control_spacing = 0.0;
    int integration_steps = 0;
};

// Pull-back map: coords(x) is the source world coordinate (mm) read by
// output voxel x.
struct DeformationField {
    VoxelGrid grid;
    Volume coords; // 3 channels
    DeformationProvenance provenance;
};

DeformationField identity_deformation(const VoxelGrid& grid);

// coords(x) = A(world(x) + u(x)).
DeformationField compose(const Volume& u, const AffineParams& affine, const VoxelGrid& grid);

// Output lives on phi.grid; samples `vol` on its own grid.
Volume warp_image(const Volume& vol, const DeformationField& phi, Boundary boundary = Boundary::clamp);
LabelVolume warp_labels(const LabelVolume& labels, const DeformationField& phi);

// det(d coords / d world) per voxel; central differences inside,
// one-sided on the faces.
Volume jacobian_determinant(const DeformationField& phi);

struct DeformationRanges {
    AffineRanges affine;
    double svf_control_spacing = 16.0;
    Range svf_amplitude{0.0, 3.0};
    int integration_steps = 7;

    void validate() const;
};

// Full random draw of phi on `grid`, affine centred at `center`. Affine
// factors come from rng.derive("affine"), the SVF from rng.derive("svf").
DeformationField sample_deformation(const Rng& rng, const DeformationRanges& ranges, const VoxelGrid& grid,
                                    const Vec3& center);

} // namespace synthvol
