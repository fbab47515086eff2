#include "synthvol/lattice.hpp"

#include <cmath>

#include <fmt/format.h>

#include "synthvol/errors.hpp"

namespace synthvol {

VoxelGrid control_lattice(const VoxelGrid& grid, double control_spacing) {
    if (!(control_spacing > 0.0) || !std::isfinite(control_spacing)) {
        throw ConfigError(fmt::format("control spacing {} must be finite and > 0", control_spacing));
    }
    VoxelGrid coarse = grid;
    for (int a = 0; a < 3; ++a) {
        const double extent = double(grid.dims[static_cast<std::size_t>(a)] - 1) * grid.spacing[a];
        coarse.dims[static_cast<std::size_t>(a)] = static_cast<std::int64_t>(std::ceil(extent / control_spacing - 1e-9)) + 1;
        coarse.spacing[a] = control_spacing;
    }
    return coarse;
}

Volume lattice_gaussian_field(const Rng& rng, const VoxelGrid& grid, double control_spacing, int channels) {
    const VoxelGrid coarse = control_lattice(grid, control_spacing);
    const std::size_t nodes = coarse.voxel_count();
    std::vector<float> values(nodes * static_cast<std::size_t>(channels));
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<float>(rng.normal_at(i));
    }
    return resample(Volume(coarse, channels, std::move(values)), grid, Interpolation::trilinear, Boundary::clamp);
}

} // namespace synthvol
