#include "synthvol/export.hpp"

#include <fstream>

#include <fmt/format.h>

#include "synthvol/errors.hpp"
#include "synthvol/nifti.hpp"

namespace synthvol {

namespace fs = std::filesystem;
using nlohmann::json;

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(fmt::format("{}: cannot open for writing", path.string()));
    }
    out << doc.dump(2) << '\n';
    if (!out) {
        throw IoError(fmt::format("{}: write failed", path.string()));
    }
}

void write_bundle(const fs::path& dir, const SampleBundle& b) {
    const fs::path tdir = dir / "targets";
    fs::create_directories(tdir);
    write_nifti(dir / "input.nii.gz", b.input, NiftiDatatype::float32, "synthetic input");
    const std::int32_t max_label = b.targets.seg.label_set().empty() ? 0 : b.targets.seg.label_set().back();
    write_nifti(tdir / "seg.nii.gz", b.targets.seg, max_label <= 32767 ? NiftiDatatype::int16 : NiftiDatatype::int32,
                "segmentation");
    for (const auto& [name, vol] : b.targets.modality_targets) {
        write_nifti(tdir / (name + ".nii.gz"), vol, NiftiDatatype::float32, name);
    }
    for (const auto& [name, vol] : b.targets.dist) {
        write_nifti(tdir / ("dist_" + name + ".nii.gz"), vol, NiftiDatatype::float32, "distance mm");
    }
    write_nifti(tdir / "atlas_coords.nii.gz", b.targets.atlas_coords, NiftiDatatype::float32, "atlas coordinates");
    write_nifti(tdir / "bias_gt.nii.gz", b.targets.bias_gt, NiftiDatatype::float32, "bias field");
    json prov = provenance_to_json(b.provenance);
    json files = json::array({"seg.nii.gz"});
    for (const auto& [name, vol] : b.targets.modality_targets) {
        files.push_back(name + ".nii.gz");
    }
    for (const auto& [name, vol] : b.targets.dist) {
        files.push_back("dist_" + name + ".nii.gz");
    }
    files.push_back("atlas_coords.nii.gz");
    files.push_back("bias_gt.nii.gz");
    prov["target_files"] = files;
    write_json(dir / "provenance.json", prov);
}

json RunManifest::to_json() const {
    json batch_list = json::array();
    for (const auto& b : batches) {
        batch_list.push_back(
            json{{"iteration", b.iteration}, {"subject_id", b.subject_id}, {"path", b.path}, {"samples", b.samples}});
    }
    return json{{"tool", "synthvol"},   {"tool_version", tool_version}, {"config_hash", config_hash},
                {"master_seed", master_seed}, {"iterations", iterations},     {"subjects", subjects},
                {"config", config},     {"batches", batch_list}};
}

RunManifest RunManifest::from_json(const json& doc) {
    RunManifest m;
    try {
        m.tool_version = doc.at("tool_version").get<std::string>();
        m.config_hash = doc.at("config_hash").get<std::string>();
        m.master_seed = doc.at("master_seed").get<std::uint64_t>();
        m.iterations = doc.at("iterations").get<std::int64_t>();
        m.subjects = doc.at("subjects").get<std::vector<std::string>>();
        m.config = doc.at("config");
        for (const auto& b : doc.at("batches")) {
            m.batches.push_back(BatchRecord{b.at("iteration").get<std::int64_t>(), b.at("subject_id").get<std::string>(),
                                            b.at("path").get<std::string>(),
                                            b.at("samples").get<std::vector<std::string>>()});
        }
    } catch (const json::exception& e) {
        throw ConfigError(fmt::format("manifest: {}", e.what()));
    }
    return m;
}

std::size_t pick_subject(std::uint64_t master_seed, std::int64_t iteration, std::size_t roster_size) {
    if (roster_size == 0) {
        throw IoError("no subjects to draw from");
    }
    Rng rng = Rng(master_seed).derive("roster").derive(static_cast<std::uint64_t>(iteration));
    return static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(roster_size) - 1));
}

} // namespace synthvol
