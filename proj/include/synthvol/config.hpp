#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthvol/appearance.hpp"
#include "synthvol/deform.hpp"
#include "synthvol/targets.hpp"

namespace synthvol {

struct GenerationConfig {
    DeformationRanges deformation;
    ContrastPrior contrast;
    CorruptionParams mild;
    CorruptionParams severe;
    // Rotate the slice_spacing vector by a random 0-2 axis shift per sample,
    // so the thick axis is not always z.
    bool randomize_slice_axis = true;
    bool mixup_enabled = true;
    MixupPrior mixup;
    int batch_size = 4;
    // Unset means the whole subject grid.
    std::optional<Index3> patch_size = Index3{128, 128, 128};
    std::uint64_t master_seed = 0;
    TargetOptions targets;

    // Throws ConfigError listing every violation with its field path.
    void validate() const;
};

// Noise endpoints 1 -> 10 (0-255 scale), bias 0.1 -> 0.5, slice spacing
// 1 mm -> 5 mm on one axis, gamma off, N = 4, 128^3 patches.
GenerationConfig default_config();

// Fields absent from the document keep their default_config() value.
// Unknown keys and type errors are rejected. The result is validated.
GenerationConfig config_from_json(const nlohmann::json& doc);
GenerationConfig load_config(const std::string& path);
nlohmann::json config_to_json(const GenerationConfig& config);

// FNV-1a of the canonical (sorted-key, compact) JSON form, as 16 hex digits.
std::string config_hash(const GenerationConfig& config);

nlohmann::json corruption_to_json(const CorruptionParams& p);

} // namespace synthvol
