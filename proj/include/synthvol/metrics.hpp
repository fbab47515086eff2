#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthvol/volume.hpp"

namespace synthvol {

// Voxel mask on a grid; non-zero labels are inside.
using Mask = LabelVolume;

// Mean |a - b| over the mask (whole grid when absent), all channels.
double l1(const Volume& a, const Volume& b, const Mask* mask = nullptr);

double mse(const Volume& a, const Volume& b, const Mask* mask = nullptr);

// 10 log10(peak^2 / mse); +infinity for identical inputs.
double psnr(const Volume& a, const Volume& b, double peak = 1.0, const Mask* mask = nullptr);
double psnr_from_mse(double mse, double peak);

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double peak = 1.0;
    int scales = 5;
    std::vector<double> weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
};

// Mean of the SSIM map over voxels whose whole window lies inside the
// volume (single channel). Throws DomainError when no such voxel exists.
double ssim(const Volume& a, const Volume& b, const SsimParams& params = {});

// Contrast-structure and luminance means, for MS-SSIM.
struct SsimTerms {
    double ssim = 0.0;
    double cs = 0.0;
};
SsimTerms ssim_terms(const Volume& a, const Volume& b, const SsimParams& params = {});

// Dyadic scales by 2x2x2 averaging; luminance enters at the coarsest scale
// only. Negative cs values are clamped to 0 before exponentiation.
double ms_ssim(const Volume& a, const Volume& b, const SsimParams& params = {});

// 2x2x2 mean pooling (trailing odd voxels dropped).
Volume downsample2(const Volume& vol);

struct DiceResult {
    std::map<std::int32_t, double> per_label;
    double mean = 0.0; // over non-background labels; NaN when there are none
};

DiceResult dice(const LabelVolume& a, const LabelVolume& b);

// Both fields divided by their mask mean, then RMS of the difference.
double norm_l2(const Volume& estimate, const Volume& truth, const Mask* mask = nullptr);

struct MetricReport {
    std::map<std::string, double> scalars;
    std::optional<DiceResult> dice;
    nlohmann::json metadata = nlohmann::json::object();

    nlohmann::json to_json() const;
    std::string to_table() const;
};

} // namespace synthvol
