#pragma once

#include "synthvol/rng.hpp"
#include "synthvol/volume.hpp"

namespace synthvol {

// Coarse lattice covering `grid`: same origin and orientation, node spacing
// `control_spacing` mm on every axis, enough nodes to reach the far edge.
VoxelGrid control_lattice(const VoxelGrid& grid, double control_spacing);

// Independent N(0,1) values on control_lattice(grid, control_spacing),
// trilinearly upsampled onto `grid`. Node n of channel c draws
// rng.normal_at(c * node_count + n).
Volume lattice_gaussian_field(const Rng& rng, const VoxelGrid& grid, double control_spacing, int channels);

} // namespace synthvol
