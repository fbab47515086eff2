#include "synthvol/appearance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "synthvol/errors.hpp"
#include "synthvol/lattice.hpp"

namespace synthvol {

namespace {

inline float clamp01(double v) {
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

void check_nonnegative(double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) {
        throw ConfigError(fmt::format("{}: {} must be finite and >= 0", name, v));
    }
}

// Linear resampling along one axis of every channel. Output node p reads
// input position p * step (input voxel units), edges clamped.
Volume resample_axis(const Volume& vol, int axis, std::int64_t out_n, double step, const VoxelGrid& out_grid) {
    const VoxelGrid& g = vol.grid();
    const std::int64_t n = g.dims[static_cast<std::size_t>(axis)];
    const std::size_t in_count = g.voxel_count();
    const std::size_t out_count = out_grid.voxel_count();
    const std::int64_t in_stride = axis == 0 ? 1 : (axis == 1 ? g.dims[0] : g.dims[0] * g.dims[1]);
    const std::int64_t out_stride = axis == 0 ? 1 : (axis == 1 ? out_grid.dims[0] : out_grid.dims[0] * out_grid.dims[1]);

    // Precompute taps once per axis.
    std::vector<std::int64_t> i0(static_cast<std::size_t>(out_n));
    std::vector<double> frac(static_cast<std::size_t>(out_n));
    for (std::int64_t p = 0; p < out_n; ++p) {
        const double x = std::clamp(double(p) * step, 0.0, double(n - 1));
        std::int64_t f = static_cast<std::int64_t>(std::floor(x));
        f = n == 1 ? 0 : std::min(f, n - 2);
        i0[static_cast<std::size_t>(p)] = f;
        frac[static_cast<std::size_t>(p)] = n == 1 ? 0.0 : x - double(f);
    }
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    const std::int64_t d1 = out_grid.dims[static_cast<std::size_t>(a1)];
    const std::int64_t d2 = out_grid.dims[static_cast<std::size_t>(a2)];
    const std::int64_t in_s1 = a1 == 0 ? 1 : g.dims[0];
    const std::int64_t in_s2 = a2 == 1 ? g.dims[0] : g.dims[0] * g.dims[1];
    const std::int64_t out_s1 = a1 == 0 ? 1 : out_grid.dims[0];
    const std::int64_t out_s2 = a2 == 1 ? out_grid.dims[0] : out_grid.dims[0] * out_grid.dims[1];

    std::vector<float> out(out_count * static_cast<std::size_t>(vol.channels()));
    for (int c = 0; c < vol.channels(); ++c) {
        const float* in = vol.channel(c).data();
        float* dst = out.data() + std::size_t(c) * out_count;
#pragma omp parallel for schedule(static)
        for (std::int64_t l = 0; l < d1 * d2; ++l) {
            const std::int64_t u = l % d1;
            const std::int64_t w = l / d1;
            const std::int64_t in_base = u * in_s1 + w * in_s2;
            const std::int64_t out_base = u * out_s1 + w * out_s2;
            for (std::int64_t p = 0; p < out_n; ++p) {
                const std::int64_t f = i0[static_cast<std::size_t>(p)];
                const double t = frac[static_cast<std::size_t>(p)];
                const double v0 = in[in_base + f * in_stride];
                const double v = t == 0.0 ? v0 : (1.0 - t) * v0 + t * double(in[in_base + (f + 1) * in_stride]);
                dst[out_base + p * out_stride] = static_cast<float>(v);
            }
        }
    }
    (void)in_count;
    return Volume(out_grid, vol.channels(), std::move(out));
}

} // namespace

LabelPrior ContrastPrior::for_label(std::int32_t label) const {
    const auto it = per_label_overrides.find(label);
    if (it != per_label_overrides.end()) {
        return it->second;
    }
    return LabelPrior{mu_mean, mu_std, sigma_scale};
}

void ContrastPrior::validate() const {
    if (!std::isfinite(mu_mean)) {
        throw ConfigError("contrast.mu_mean: must be finite");
    }
    check_nonnegative(mu_std, "contrast.mu_std");
    check_nonnegative(sigma_scale, "contrast.sigma_scale");
    for (const auto& [label, p] : per_label_overrides) {
        if (!std::isfinite(p.mu_mean) || !std::isfinite(p.mu_std) || p.mu_std < 0.0 || !std::isfinite(p.sigma_scale) ||
            p.sigma_scale < 0.0) {
            throw ConfigError(fmt::format("contrast.per_label_overrides.{}: requires finite mu_mean, mu_std >= 0, "
                                          "sigma_scale >= 0",
                                          label));
        }
    }
}

std::map<std::int32_t, LabelDraw> draw_label_params(const LabelVolume& labels, const Rng& rng,
                                                    const ContrastPrior& prior) {
    prior.validate();
    std::map<std::int32_t, LabelDraw> draws;
    const Rng param_rng = rng.derive("label-params");
    for (std::int32_t l : labels.label_set()) {
        const LabelPrior p = prior.for_label(l);
        const auto key = static_cast<std::uint64_t>(static_cast<std::uint32_t>(l));
        LabelDraw d;
        d.mu = p.mu_mean + p.mu_std * param_rng.normal_at(2 * key);
        d.sigma = std::abs(p.sigma_scale * param_rng.normal_at(2 * key + 1));
        draws[l] = d;
    }
    return draws;
}

Volume paint_labels(const LabelVolume& labels, const Rng& rng, const std::map<std::int32_t, LabelDraw>& draws) {
    if (labels.empty() || labels.voxel_count() == 0) {
        throw DomainError("paint_labels: empty label volume");
    }
    for (std::int32_t l : labels.label_set()) {
        if (!draws.count(l)) {
            throw DomainError(fmt::format("paint_labels: no intensity draw for label {}", l));
        }
    }
    const auto& set = labels.label_set();
    const std::int32_t min_label = set.front();
    const std::int32_t max_label = set.back();
    std::vector<LabelDraw> table;
    const bool dense = min_label >= 0 && max_label < (1 << 20);
    if (dense) {
        table.resize(static_cast<std::size_t>(max_label) + 1);
        for (const auto& [l, d] : draws) {
            if (l >= 0 && l <= max_label) {
                table[static_cast<std::size_t>(l)] = d;
            }
        }
    }
    const Rng voxel_rng = rng.derive("voxels");
    const auto in = labels.labels();
    const std::size_t n = in.size();
    std::vector<float> out(n);

    const auto pairs = static_cast<std::int64_t>((n + 1) / 2);
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < pairs; ++p) {
        std::array<double, 2> z{};
        bool drawn = false;
        for (std::size_t h = 0; h < 2; ++h) {
            const std::size_t i = 2 * std::size_t(p) + h;
            if (i >= n) {
                break;
            }
            const std::int32_t l = in[i];
            const LabelDraw d = dense ? table[static_cast<std::size_t>(l)] : draws.at(l);
            if (d.sigma == 0.0) {
                out[i] = clamp01(d.mu);
                continue;
            }
            if (!drawn) {
                z = voxel_rng.normal_pair_at(std::uint64_t(p));
                drawn = true;
            }
            out[i] = clamp01(d.mu + d.sigma * z[h]);
        }
    }
    return Volume(labels.grid(), 1, std::move(out));
}

PaintedImage paint_contrast(const LabelVolume& labels, const Rng& rng, const ContrastPrior& prior) {
    if (labels.empty() || labels.voxel_count() == 0) {
        throw DomainError("paint_contrast: empty label volume");
    }
    PaintedImage result;
    result.draws = draw_label_params(labels, rng, prior);
    result.image = paint_labels(labels, rng, result.draws);
    return result;
}

void CorruptionParams::validate() const {
    check_nonnegative(bias_amplitude, "bias_amplitude");
    if (!(bias_control_spacing > 0.0) || !std::isfinite(bias_control_spacing)) {
        throw ConfigError("bias_control_spacing_mm: must be finite and > 0");
    }
    check_nonnegative(noise_sigma, "noise_sigma");
    for (int a = 0; a < 3; ++a) {
        if (!(slice_spacing[a] > 0.0) || !std::isfinite(slice_spacing[a])) {
            throw ConfigError(fmt::format("slice_spacing_mm[{}]: must be finite and > 0", a));
        }
    }
    check_nonnegative(gamma_log_std, "gamma_log_std");
    if (!(mixup_lambda >= 0.0 && mixup_lambda <= 1.0)) {
        throw ConfigError("mixup_lambda: must lie in [0, 1]");
    }
}

Volume sample_bias_field(const Rng& rng, const VoxelGrid& grid, double amplitude, double control_spacing) {
    check_nonnegative(amplitude, "sample_bias_field: amplitude");
    if (amplitude == 0.0) {
        return Volume::filled(grid, 1, 1.0f);
    }
    const Volume g = lattice_gaussian_field(rng, grid, control_spacing, 1);
    std::vector<float> out = g.copy_data();
    for (float& v : out) {
        v = static_cast<float>(std::exp(amplitude * double(v)));
    }
    return Volume(grid, 1, std::move(out));
}

Volume apply_bias(const Volume& vol, const Volume& field) {
    if (!vol.grid().same_geometry(field.grid()) || field.channels() != 1) {
        throw ShapeError("apply_bias: field must be a single-channel volume on the image grid");
    }
    const auto f = field.data();
    std::vector<float> out = vol.copy_data();
    const std::size_t n = vol.voxel_count();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = clamp01(double(out[i]) * double(f[i % n]));
    }
    return Volume(vol.grid(), vol.channels(), std::move(out));
}

Volume add_noise(const Volume& vol, double noise_sigma, const Rng& rng) {
    check_nonnegative(noise_sigma, "add_noise: noise_sigma");
    if (noise_sigma == 0.0) {
        return vol;
    }
    const double s = noise_sigma / 255.0;
    std::vector<float> out = vol.copy_data();
    const std::size_t n = out.size();
#pragma omp parallel for schedule(static)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>((n + 1) / 2); ++p) {
        const auto z = rng.normal_pair_at(std::uint64_t(p));
        for (std::size_t h = 0; h < 2 && 2 * std::size_t(p) + h < n; ++h) {
            const std::size_t i = 2 * std::size_t(p) + h;
            out[i] = clamp01(double(out[i]) + s * z[h]);
        }
    }
    return Volume(vol.grid(), vol.channels(), std::move(out));
}

Volume simulate_resolution(const Volume& vol, const Vec3& slice_spacing) {
    const VoxelGrid& g = vol.grid();
    std::array<double, 3> sigma{};
    bool identity = true;
    for (int a = 0; a < 3; ++a) {
        const double native = g.spacing[a];
        const double slice = slice_spacing[a];
        if (!std::isfinite(slice) || slice < native * (1.0 - 1e-9)) {
            throw ConfigError(fmt::format("simulate_resolution: slice spacing {} mm on axis {} is below the native "
                                          "spacing {} mm",
                                          slice, a, native));
        }
        const double ratio = std::max(slice / native, 1.0);
        // sigma_mm = 0.85 (ratio - 1) native, expressed in native voxels.
        sigma[static_cast<std::size_t>(a)] = 0.85 * (ratio - 1.0);
        identity = identity && ratio == 1.0;
    }
    if (identity) {
        return vol;
    }
    Volume cur = gaussian_blur(vol, sigma);
    for (int a = 0; a < 3; ++a) {
        const double ratio = std::max(slice_spacing[a] / g.spacing[a], 1.0);
        if (ratio == 1.0 || g.dims[static_cast<std::size_t>(a)] == 1) {
            continue;
        }
        const std::int64_t n = g.dims[static_cast<std::size_t>(a)];
        const auto low_n = static_cast<std::int64_t>(std::floor(double(n - 1) / ratio + 1e-9)) + 1;
        VoxelGrid low = cur.grid();
        low.dims[static_cast<std::size_t>(a)] = low_n;
        low.spacing[a] = slice_spacing[a];
        const Volume down = resample_axis(cur, a, low_n, ratio, low);
        VoxelGrid back = down.grid();
        back.dims[static_cast<std::size_t>(a)] = n;
        back.spacing[a] = g.spacing[a];
        cur = resample_axis(down, a, n, 1.0 / ratio, back);
    }
    return Volume(g, cur.channels(), cur.copy_data());
}

Volume apply_gamma(const Volume& vol, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ConfigError(fmt::format("apply_gamma: gamma {} must be finite and > 0", gamma));
    }
    if (gamma == 1.0) {
        return vol;
    }
    std::vector<float> out = vol.copy_data();
    for (float& v : out) {
        v = clamp01(std::pow(std::max(double(v), 0.0), gamma));
    }
    return Volume(vol.grid(), vol.channels(), std::move(out));
}

GammaResult gamma_augment(const Volume& vol, Rng& rng, double gamma_log_std) {
    check_nonnegative(gamma_log_std, "gamma_augment: gamma_log_std");
    if (gamma_log_std == 0.0) {
        return {vol, 1.0};
    }
    const double gamma = std::exp(gamma_log_std * rng.normal());
    return {apply_gamma(vol, gamma), gamma};
}

Volume mixup(const Volume& synth, const Volume& real, double lambda) {
    if (!synth.grid().same_geometry(real.grid()) || synth.channels() != real.channels()) {
        throw ShapeError("mixup: synthetic and real images must share grid and channel count");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ConfigError(fmt::format("mixup: lambda {} outside [0, 1]", lambda));
    }
    const auto s = synth.data();
    const auto r = real.data();
    std::vector<float> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        out[i] = static_cast<float>(lambda * double(s[i]) + (1.0 - lambda) * double(r[i]));
    }
    return Volume(synth.grid(), synth.channels(), std::move(out));
}

void MixupPrior::validate() const {
    if (!(lambda.lo >= 0.0 && lambda.lo <= lambda.hi && lambda.hi <= 1.0)) {
        throw ConfigError("mixup.lambda: range must satisfy 0 <= lo <= hi <= 1");
    }
}

double sample_mixup_lambda(Rng& rng, const MixupPrior& prior, bool has_real) {
    prior.validate();
    if (!has_real) {
        return 1.0;
    }
    return rng.uniform(prior.lambda.lo, prior.lambda.hi);
}

Volume normalize_min_max(const Volume& vol) {
    const auto d = vol.data();
    if (d.empty()) {
        return vol;
    }
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    const double a = *lo;
    const double range = double(*hi) - a;
    std::vector<float> out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        out[i] = range > 0.0 ? clamp01((double(d[i]) - a) / range) : 0.0f;
    }
    return Volume(vol.grid(), vol.channels(), std::move(out));
}

Volume clamp_unit(const Volume& vol) {
    std::vector<float> out = vol.copy_data();
    for (float& v : out) {
        v = clamp01(v);
    }
    return Volume(vol.grid(), vol.channels(), std::move(out));
}

} // namespace synthvol
