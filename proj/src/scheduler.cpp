#include "synthvol/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "synthvol/errors.hpp"
#include "synthvol/nifti.hpp"

namespace synthvol {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> severity_schedule(int n) {
    if (n < 1) {
        throw ConfigError(fmt::format("severity_schedule: N = {} must be >= 1", n));
    }
    if (n == 1) {
        return {0.5};
    }
    std::vector<double> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        s[static_cast<std::size_t>(i)] = double(i) / double(n - 1);
    }
    return s;
}

CorruptionParams interpolate_corruption(const CorruptionParams& mild, const CorruptionParams& severe, double s) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw ConfigError(fmt::format("interpolate_corruption: severity {} outside [0, 1]", s));
    }
    // a + s (b - a) reproduces both endpoints exactly.
    const auto lerp = [s](double a, double b) { return s == 1.0 ? b : a + s * (b - a); };
    CorruptionParams p;
    p.bias_amplitude = lerp(mild.bias_amplitude, severe.bias_amplitude);
    p.bias_control_spacing = lerp(mild.bias_control_spacing, severe.bias_control_spacing);
    p.noise_sigma = lerp(mild.noise_sigma, severe.noise_sigma);
    for (int a = 0; a < 3; ++a) {
        p.slice_spacing[a] = lerp(mild.slice_spacing[a], severe.slice_spacing[a]);
    }
    p.gamma_log_std = lerp(mild.gamma_log_std, severe.gamma_log_std);
    p.mixup_lambda = 1.0;
    return p;
}

const std::vector<std::string>& stage_order() {
    static const std::vector<std::string> order = {"deform", "paint", "mixup", "bias", "gamma", "resolution", "noise"};
    return order;
}

Rng batch_stream(std::uint64_t master_seed, const std::string& subject_id, std::int64_t iteration) {
    return Rng(master_seed).derive(subject_id).derive(static_cast<std::uint64_t>(iteration));
}

namespace {

json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }
json index_json(const Index3& v) { return json::array({v[0], v[1], v[2]}); }

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

struct BatchShared {
    Index3 offset{0, 0, 0};
    Index3 size{0, 0, 0};
    VoxelGrid patch;
    DeformationField phi;
    LabelVolume warped_labels;
    TargetSet targets;
    std::vector<std::string> reals; // sorted names available for mix-up
};

SampleBundle make_sample(const Subject& subject, const GenerationConfig& config, const BatchShared& shared,
                         const Rng& root, std::int64_t iteration, int index, double severity) {
    const Rng rng = root.derive("sample").derive(static_cast<std::uint64_t>(index));
    SampleProvenance prov;
    prov.master_seed = config.master_seed;
    prov.subject_id = subject.id;
    prov.iteration = iteration;
    prov.sample_index = index;
    prov.stream_key = rng.key();
    prov.severity = severity;
    prov.patch_offset = shared.offset;
    prov.patch_size = shared.size;
    prov.deformation = shared.phi.provenance;
    prov.absent_targets = shared.targets.absent;

    CorruptionParams params = interpolate_corruption(config.mild, config.severe, severity);
    if (config.randomize_slice_axis) {
        Rng axis_rng = rng.derive("slice-axis");
        prov.slice_axis_shift = static_cast<int>(axis_rng.uniform_int(0, 2));
    }
    Vec3 slice;
    for (int a = 0; a < 3; ++a) {
        slice[a] = std::max(params.slice_spacing[(a + prov.slice_axis_shift) % 3], shared.patch.spacing[a]);
    }
    params.slice_spacing = slice;

    PaintedImage painted = paint_contrast(shared.warped_labels, rng.derive("contrast"), config.contrast);
    prov.label_draws = painted.draws;
    Volume img = painted.image;

    const bool has_real = config.mixup_enabled && !shared.reals.empty();
    Rng mix_rng = rng.derive("mixup");
    params.mixup_lambda = sample_mixup_lambda(mix_rng, config.mixup, has_real);
    if (has_real) {
        const auto pick = static_cast<std::size_t>(mix_rng.uniform_int(0, std::int64_t(shared.reals.size()) - 1));
        prov.mixup_modality = shared.reals[pick];
        img = mixup(img, shared.targets.modality_targets.at(shared.reals[pick]), params.mixup_lambda);
    }
    const Volume clean = img;

    const Volume bias =
        sample_bias_field(rng.derive("bias"), shared.patch, params.bias_amplitude, params.bias_control_spacing);
    img = apply_bias(img, bias);
    Rng gamma_rng = rng.derive("gamma");
    GammaResult g = gamma_augment(img, gamma_rng, params.gamma_log_std);
    prov.gamma = g.gamma;
    img = simulate_resolution(g.image, params.slice_spacing);
    img = add_noise(img, params.noise_sigma, rng.derive("noise"));
    prov.corruption = params;

    SampleBundle b;
    b.input = std::move(img);
    b.clean = clean;
    b.targets = shared.targets;
    b.targets.bias_gt = bias;
    b.severity = severity;
    b.provenance = std::move(prov);
    return b;
}

} // namespace

json provenance_to_json(const SampleProvenance& p) {
    json draws = json::object();
    for (const auto& [label, d] : p.label_draws) {
        draws[std::to_string(label)] = json{{"mu", d.mu}, {"sigma", d.sigma}};
    }
    const AffineParams& a = p.deformation.affine;
    json corruption = corruption_to_json(p.corruption);
    corruption["mixup_lambda"] = p.corruption.mixup_lambda;
    return json{
        {"master_seed", p.master_seed},
        {"subject_id", p.subject_id},
        {"iteration", p.iteration},
        {"sample_index", p.sample_index},
        {"stream_key", hex(p.stream_key)},
        {"severity", p.severity},
        {"stage_order", stage_order()},
        {"corruption", corruption},
        {"slice_axis_shift", p.slice_axis_shift},
        {"gamma", p.gamma},
        {"mixup_modality", p.mixup_modality ? json(*p.mixup_modality) : json(nullptr)},
        {"label_draws", draws},
        {"patch", {{"offset", index_json(p.patch_offset)}, {"size", index_json(p.patch_size)}}},
        {"deformation",
         {{"affine",
           {{"rotation_deg", vec_json(a.rotation_deg)},
            {"scaling", vec_json(a.scaling)},
            {"shearing", vec_json(a.shearing)},
            {"translation_mm", vec_json(a.translation_mm)},
            {"center_mm", vec_json(a.center)}}},
          {"svf_key", hex(p.deformation.svf_key)},
          {"svf_amplitude_mm", p.deformation.svf_amplitude},
          {"svf_control_spacing_mm", p.deformation.svf_control_spacing},
          {"integration_steps", p.deformation.integration_steps}}},
        {"absent_targets", p.absent_targets},
    };
}

std::vector<SampleBundle> generate_batch(const Subject& subject, const GenerationConfig& config,
                                         std::int64_t iteration) {
    config.validate();
    subject.validate();
    const VoxelGrid& g = subject.labels.grid();
    const Rng root = batch_stream(config.master_seed, subject.id, iteration);

    BatchShared shared;
    shared.size = config.patch_size.value_or(g.dims);
    Rng patch_rng = root.derive("patch");
    for (std::size_t a = 0; a < 3; ++a) {
        if (shared.size[a] > g.dims[a]) {
            throw ConfigError(fmt::format("patch_size: {} x {} x {} exceeds subject {} grid {} x {} x {}",
                                          shared.size[0], shared.size[1], shared.size[2], subject.id, g.dims[0],
                                          g.dims[1], g.dims[2]));
        }
    }
    for (std::size_t a = 0; a < 3; ++a) {
        shared.offset[a] = patch_rng.uniform_int(0, g.dims[a] - shared.size[a]);
    }
    shared.patch = g.crop(shared.offset, shared.size);
    shared.phi = sample_deformation(root.derive("deformation"), config.deformation, shared.patch, g.center_world());
    shared.warped_labels = warp_labels(subject.labels, shared.phi);
    shared.targets = assemble_shared_targets(subject, shared.phi, config.targets);
    for (const auto& [name, vol] : subject.reals) {
        shared.reals.push_back(name);
    }

    const std::vector<double> severities = severity_schedule(config.batch_size);
    std::vector<SampleBundle> out(severities.size());
    const auto n = static_cast<std::int64_t>(severities.size());
    // Samples are independent; errors are rethrown on the calling thread.
    std::vector<std::exception_ptr> errors(severities.size());
#pragma omp parallel for schedule(dynamic, 1) if (n > 1)
    for (std::int64_t i = 0; i < n; ++i) {
        try {
            out[std::size_t(i)] =
                make_sample(subject, config, shared, root, iteration, static_cast<int>(i), severities[std::size_t(i)]);
        } catch (...) {
            errors[std::size_t(i)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return out;
}

Subject load_subject(const std::string& dir) {
    const fs::path root(dir);
    if (!fs::is_directory(root)) {
        throw IoError(fmt::format("{}: subject directory not found", dir));
    }
    const auto find = [&](const std::string& stem) -> std::optional<fs::path> {
        for (const char* ext : {".nii.gz", ".nii"}) {
            const fs::path p = root / (stem + ext);
            if (fs::is_regular_file(p)) {
                return p;
            }
        }
        return std::nullopt;
    };
    Subject s;
    s.id = root.filename().string();
    if (s.id.empty()) {
        s.id = root.parent_path().filename().string();
    }
    const auto labels_path = find("labels");
    if (!labels_path) {
        throw IoError(fmt::format("{}: missing labels.nii.gz", dir));
    }
    s.labels = read_nifti_labels(*labels_path);
    for (const std::string& m : kModalities) {
        const auto p = find(m);
        if (!p) {
            continue;
        }
        Volume v = read_nifti(*p);
        if (v.channels() != 1) {
            throw FormatError(fmt::format("{}: expected a single-channel image, found {} channels", p->string(),
                                          v.channels()));
        }
        if (!v.grid().same_geometry(s.labels.grid(), 1e-4)) {
            const auto& a = v.grid();
            const auto& b = s.labels.grid();
            throw ShapeError(fmt::format("{}: grid {}x{}x{} does not match labels grid {}x{}x{} (or differs in "
                                         "spacing, origin or orientation)",
                                         p->string(), a.dims[0], a.dims[1], a.dims[2], b.dims[0], b.dims[1],
                                         b.dims[2]));
        }
        // Sub-1e-4 header rounding is absorbed onto the label grid.
        s.reals[m] = normalize_min_max(Volume(s.labels.grid(), 1, v.copy_data()));
    }
    const fs::path atlas = root / "atlas_transform.txt";
    if (fs::is_regular_file(atlas)) {
        std::ifstream in(atlas);
        Mat4 m;
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                if (!(in >> m(r, c)) || !std::isfinite(m(r, c))) {
                    throw FormatError(fmt::format("{}: expected 16 finite numbers", atlas.string()));
                }
            }
        }
        std::string extra;
        if (in >> extra) {
            throw FormatError(fmt::format("{}: trailing content after 16 numbers", atlas.string()));
        }
        s.atlas_transform = m;
    }
    s.validate();
    return s;
}

} // namespace synthvol
