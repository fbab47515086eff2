#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthvol/config.hpp"
#include "synthvol/scheduler.hpp"

namespace synthvol {

inline constexpr const char* kToolVersion = "0.1.0";

// Writes <dir>/input.nii.gz, <dir>/provenance.json and <dir>/targets/*.nii.gz:
// seg, one file per modality target, dist_<name>, atlas_coords, bias_gt.
void write_bundle(const std::filesystem::path& dir, const SampleBundle& bundle);

// Index entry for one batch of a run.
struct BatchRecord {
    std::int64_t iteration = 0;
    std::string subject_id;
    std::string path; // relative to the run directory
    std::vector<std::string> samples;
};

struct RunManifest {
    std::string tool_version = kToolVersion;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::int64_t iterations = 0;
    std::vector<std::string> subjects; // subject ids, roster order
    nlohmann::json config;             // full resolved config
    std::vector<BatchRecord> batches;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& doc);
};

// Subject drawn for an iteration: uniform over the roster, keyed by
// (master_seed, iteration) only.
std::size_t pick_subject(std::uint64_t master_seed, std::int64_t iteration, std::size_t roster_size);

// Canonical JSON text (2-space indent, trailing newline).
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

} // namespace synthvol
