#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthvol/config.hpp"
#include "synthvol/targets.hpp"

namespace synthvol {

// s_i = (i - 1) / (N - 1); a single sample sits at 0.5.
std::vector<double> severity_schedule(int n);

// Fieldwise linear interpolation between the endpoints at severity s.
CorruptionParams interpolate_corruption(const CorruptionParams& mild, const CorruptionParams& severe, double s);

// Stage names in the order they are applied to every sample.
const std::vector<std::string>& stage_order();

struct SampleProvenance {
    std::uint64_t master_seed = 0;
    std::string subject_id;
    std::int64_t iteration = 0;
    int sample_index = 0;
    std::uint64_t stream_key = 0;
    double severity = 0.0;
    // Levels actually applied: slice spacing after the axis shift and
    // clamping to the native spacing, mixup_lambda as drawn.
    CorruptionParams corruption;
    int slice_axis_shift = 0;
    std::map<std::int32_t, LabelDraw> label_draws;
    std::optional<std::string> mixup_modality;
    double gamma = 1.0;
    Index3 patch_offset{0, 0, 0};
    Index3 patch_size{0, 0, 0};
    DeformationProvenance deformation;
    std::vector<std::string> absent_targets;
};

nlohmann::json provenance_to_json(const SampleProvenance& p);

struct SampleBundle {
    Volume input;
    // Contrast-painted (and mixed) image before the corruption stages.
    Volume clean;
    TargetSet targets;
    double severity = 0.0;
    SampleProvenance provenance;
};

// One deformation and one patch location for the whole batch, then
// config.batch_size samples with their own contrast and corruption draws at
// the scheduled severities. Randomness is keyed by
// (master_seed, subject.id, iteration, sample, stage), so the result does not
// depend on thread count.
std::vector<SampleBundle> generate_batch(const Subject& subject, const GenerationConfig& config,
                                         std::int64_t iteration);

// Root stream of a batch.
Rng batch_stream(std::uint64_t master_seed, const std::string& subject_id, std::int64_t iteration);

// Reads labels.nii[.gz] and any of t1w / t2w / flair / ct .nii[.gz] from
// `dir`, plus an optional atlas_transform.txt (4x4, row-major). The subject
// id is the directory name. Reals are min-max normalised.
// Throws IoError for a missing label map, ShapeError naming the file for a
// grid mismatch.
Subject load_subject(const std::string& dir);

} // namespace synthvol
