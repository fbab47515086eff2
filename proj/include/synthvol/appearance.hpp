#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "synthvol/range.hpp"
#include "synthvol/rng.hpp"
#include "synthvol/volume.hpp"

namespace synthvol {

// Gaussian mixture prior for label-wise intensities, normalised domain.
struct LabelPrior {
    double mu_mean = 0.5;
    double mu_std = 0.25;
    double sigma_scale = 0.05;
};

struct ContrastPrior {
    double mu_mean = 0.5;
    double mu_std = 0.25;
    double sigma_scale = 0.05;
    std::map<std::int32_t, LabelPrior> per_label_overrides;

    LabelPrior for_label(std::int32_t label) const;
    void validate() const;
};

struct LabelDraw {
    double mu = 0.0;
    double sigma = 0.0;
};

struct PaintedImage {
    Volume image;
    std::map<std::int32_t, LabelDraw> draws;
};

// Per label l: mu_l ~ N(mu_mean, mu_std), sigma_l = |N(0, sigma_scale)|,
// then I(x) ~ N(mu_l, sigma_l) clamped to [0, 1]. The label parameters are
// keyed by label value and the voxel draws by voxel index, so a replay with
// the same rng reproduces both exactly.
PaintedImage paint_contrast(const LabelVolume& labels, const Rng& rng, const ContrastPrior& prior);

// The two halves of paint_contrast. paint_labels needs a draw for every
// label present and uses rng.derive("voxels") for the voxel noise.
std::map<std::int32_t, LabelDraw> draw_label_params(const LabelVolume& labels, const Rng& rng,
                                                    const ContrastPrior& prior);
Volume paint_labels(const LabelVolume& labels, const Rng& rng, const std::map<std::int32_t, LabelDraw>& draws);

// Level of every corruption stage. noise_sigma is on the 0-255 scale.
struct CorruptionParams {
    double bias_amplitude = 0.0;
    double bias_control_spacing = 48.0;
    double noise_sigma = 0.0;
    Vec3 slice_spacing = Vec3::Ones();
    double gamma_log_std = 0.0;
    double mixup_lambda = 1.0;

    void validate() const;
};

// exp(amplitude * G) with G a lattice Gaussian field; strictly positive.
Volume sample_bias_field(const Rng& rng, const VoxelGrid& grid, double amplitude, double control_spacing);

// Voxelwise product, clamped to [0, 1].
Volume apply_bias(const Volume& vol, const Volume& field);

// Additive N(0, (noise_sigma / 255)^2), clamped to [0, 1].
Volume add_noise(const Volume& vol, double noise_sigma, const Rng& rng);

// Thick-slice acquisition model: Gaussian anti-aliasing with
// sigma_mm = 0.85 * (slice / native - 1) * native per axis, resampling onto
// a grid of spacing `slice_spacing`, then trilinear upsampling back onto the
// native grid. Native spacing is vol.grid().spacing.
Volume simulate_resolution(const Volume& vol, const Vec3& slice_spacing);

struct GammaResult {
    Volume image;
    double gamma = 1.0;
};

Volume apply_gamma(const Volume& vol, double gamma);
// log(gamma) ~ N(0, gamma_log_std).
GammaResult gamma_augment(const Volume& vol, Rng& rng, double gamma_log_std);

// lambda * synth + (1 - lambda) * real.
Volume mixup(const Volume& synth, const Volume& real, double lambda);

struct MixupPrior {
    Range lambda{0.3, 1.0};
    void validate() const;
};

// lambda drawn from the prior when a real image exists, 1 otherwise.
double sample_mixup_lambda(Rng& rng, const MixupPrior& prior, bool has_real);

// Affine rescale of all values onto [0, 1]; constant volumes map to 0.
Volume normalize_min_max(const Volume& vol);

Volume clamp_unit(const Volume& vol);

} // namespace synthvol
