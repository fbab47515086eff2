#include "synthvol/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "synthvol/config.hpp"
#include "synthvol/errors.hpp"
#include "synthvol/export.hpp"
#include "synthvol/metrics.hpp"
#include "synthvol/nifti.hpp"
#include "synthvol/scheduler.hpp"

namespace synthvol {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Failure while reading subjects; always reported as an input error.
struct SubjectLoadError : Error {
    using Error::Error;
};

std::uint64_t parse_seed(const std::string& text, const char* origin) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used, 0);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || text.front() == '-') {
        throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer seed", origin, text));
    }
    return v;
}

bool has_labels(const fs::path& dir) {
    return fs::is_regular_file(dir / "labels.nii.gz") || fs::is_regular_file(dir / "labels.nii");
}

// Subject directories under `root`, sorted by name. A directory that itself
// holds a label map is a one-subject roster.
std::vector<fs::path> list_subject_dirs(const fs::path& root) {
    if (!fs::is_directory(root)) {
        throw SubjectLoadError(fmt::format("{}: subjects directory not found", root.string()));
    }
    if (has_labels(root)) {
        return {root};
    }
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) {
            dirs.push_back(e.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) {
        throw SubjectLoadError(fmt::format("{}: no subject directories found", root.string()));
    }
    return dirs;
}

Subject load_subject_checked(const fs::path& dir) {
    try {
        return load_subject(dir.string());
    } catch (const Error& e) {
        throw SubjectLoadError(e.what());
    }
}

void ensure_empty_out(const fs::path& out) {
    if (fs::exists(out)) {
        if (!fs::is_directory(out)) {
            throw IoError(fmt::format("{}: output path exists and is not a directory", out.string()));
        }
        if (!fs::is_empty(out)) {
            throw IoError(fmt::format("{}: output directory is not empty", out.string()));
        }
    }
    fs::create_directories(out);
}

struct GenerateArgs {
    std::string config;
    std::string subjects_dir;
    std::string out;
    std::string manifest;
    std::int64_t iterations = 1;
    std::string seed;
    int jobs = 1;
};

json batch_json(const std::vector<SampleBundle>& batch, std::int64_t iteration, const std::string& subject,
                const std::vector<std::string>& samples) {
    json sev = json::array();
    for (const auto& b : batch) {
        sev.push_back(b.severity);
    }
    json deformation = provenance_to_json(batch.front().provenance).at("deformation");
    return json{{"iteration", iteration},
                {"subject_id", subject},
                {"severities", sev},
                {"patch", provenance_to_json(batch.front().provenance).at("patch")},
                {"deformation", deformation},
                {"samples", samples}};
}

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    GenerationConfig config;
    std::int64_t iterations = a.iterations;
    std::vector<std::string> roster_ids;
    std::optional<RunManifest> source;
    if (!a.manifest.empty()) {
        std::ifstream in(a.manifest);
        if (!in) {
            throw ConfigError(fmt::format("{}: cannot open manifest", a.manifest));
        }
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError(fmt::format("{}: not valid JSON ({})", a.manifest, e.what()));
        }
        source = RunManifest::from_json(doc);
        config = config_from_json(source->config);
        config.master_seed = source->master_seed;
        iterations = source->iterations;
        roster_ids = source->subjects;
    } else if (!a.config.empty()) {
        config = load_config(a.config);
    } else {
        config = default_config();
    }
    // Seed precedence: --seed, then SYNTHVOL_SEED, then the config/manifest.
    if (!a.seed.empty()) {
        config.master_seed = parse_seed(a.seed, "--seed");
    } else if (const char* env = std::getenv("SYNTHVOL_SEED"); env && *env) {
        config.master_seed = parse_seed(env, "SYNTHVOL_SEED");
    }
    config.validate();
    if (iterations < 0) {
        throw ConfigError("--iterations: must be >= 0");
    }
    if (a.jobs < 1) {
        throw ConfigError("--jobs: must be >= 1");
    }

    std::vector<Subject> subjects;
    if (source) {
        const fs::path base(a.subjects_dir);
        for (const auto& id : roster_ids) {
            const bool self = has_labels(base) && base.filename() == id;
            subjects.push_back(load_subject_checked(self ? base : base / id));
        }
    } else {
        for (const auto& dir : list_subject_dirs(a.subjects_dir)) {
            subjects.push_back(load_subject_checked(dir));
            roster_ids.push_back(subjects.back().id);
        }
    }
    const fs::path root(a.out);
    ensure_empty_out(root);

    RunManifest manifest;
    manifest.config = config_to_json(config);
    manifest.config_hash = config_hash(config);
    manifest.master_seed = config.master_seed;
    manifest.iterations = iterations;
    manifest.subjects = roster_ids;
    manifest.batches.resize(static_cast<std::size_t>(iterations));

    omp_set_num_threads(a.jobs);
    const bool batch_parallel = a.jobs > 1 && iterations >= a.jobs;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(iterations));
#pragma omp parallel for schedule(dynamic, 1) if (batch_parallel)
    for (std::int64_t it = 0; it < iterations; ++it) {
        try {
            const Subject& subject = subjects[pick_subject(config.master_seed, it, subjects.size())];
            const auto batch = generate_batch(subject, config, it);
            BatchRecord rec;
            rec.iteration = it;
            rec.subject_id = subject.id;
            rec.path = fmt::format("iter_{:06d}", it);
            const fs::path bdir = root / rec.path;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                rec.samples.push_back(fmt::format("sample_{:02d}", i));
                write_bundle(bdir / rec.samples.back(), batch[i]);
            }
            write_json(bdir / "batch.json", batch_json(batch, it, subject.id, rec.samples));
            manifest.batches[std::size_t(it)] = std::move(rec);
        } catch (...) {
            errors[std::size_t(it)] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    write_json(root / "manifest.json", manifest.to_json());
    out << fmt::format("wrote {} batch(es) of {} sample(s) to {} (seed {}, config {})\n", iterations,
                       config.batch_size, root.string(), config.master_seed, manifest.config_hash);
    return kExitOk;
}

struct EvaluateArgs {
    std::string pred;
    std::string truth;
    std::string metrics = "l1,psnr,ssim";
    std::string mask;
    std::string out;
    double peak = 1.0;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
    static const std::vector<std::string> known = {"l1", "psnr", "ssim", "ms_ssim", "dice", "norm_l2"};
    std::vector<std::string> wanted;
    std::stringstream ss(a.metrics);
    for (std::string item; std::getline(ss, item, ',');) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (item.empty()) {
            continue;
        }
        if (std::find(known.begin(), known.end(), item) == known.end()) {
            throw ConfigError(fmt::format("--metrics: unknown metric '{}' (known: l1, psnr, ssim, ms_ssim, dice, "
                                          "norm_l2)",
                                          item));
        }
        if (std::find(wanted.begin(), wanted.end(), item) == wanted.end()) {
            wanted.push_back(item);
        }
    }
    if (wanted.empty()) {
        throw ConfigError("--metrics: no metric selected");
    }
    const bool need_dice = std::find(wanted.begin(), wanted.end(), "dice") != wanted.end();
    const bool need_intensity = wanted.size() > (need_dice ? 1u : 0u);

    MetricReport report;
    report.metadata["pred"] = a.pred;
    report.metadata["truth"] = a.truth;
    report.metadata["peak"] = a.peak;
    report.metadata["mask"] = a.mask.empty() ? json(nullptr) : json(a.mask);

    std::optional<Mask> mask;
    const auto check_grid = [](const VoxelGrid& p, const VoxelGrid& t, const std::string& what) {
        if (!p.same_geometry(t, 1e-4)) {
            throw ShapeError(fmt::format("{}: grid {}x{}x{} does not match {}x{}x{} (or differs in spacing, origin "
                                         "or orientation)",
                                         what, p.dims[0], p.dims[1], p.dims[2], t.dims[0], t.dims[1], t.dims[2]));
        }
    };
    std::optional<VoxelGrid> grid;
    if (need_intensity) {
        const Volume pred = read_nifti(a.pred);
        Volume truth = read_nifti(a.truth);
        check_grid(pred.grid(), truth.grid(), "pred vs truth");
        if (pred.channels() != truth.channels()) {
            throw ShapeError(fmt::format("pred has {} channels, truth has {}", pred.channels(), truth.channels()));
        }
        truth = Volume(pred.grid(), truth.channels(), truth.copy_data());
        grid = pred.grid();
        if (!a.mask.empty()) {
            const LabelVolume m = read_nifti_labels(a.mask);
            check_grid(m.grid(), pred.grid(), "mask vs pred");
            mask = LabelVolume(pred.grid(), std::vector<std::int32_t>(m.labels().begin(), m.labels().end()));
        }
        const Mask* mp = mask ? &*mask : nullptr;
        SsimParams sp;
        sp.peak = a.peak;
        for (const auto& m : wanted) {
            if (m == "l1") {
                report.scalars["l1"] = l1(pred, truth, mp);
            } else if (m == "psnr") {
                report.scalars["psnr"] = psnr(pred, truth, a.peak, mp);
            } else if (m == "ssim") {
                report.scalars["ssim"] = ssim(pred, truth, sp);
            } else if (m == "ms_ssim") {
                report.scalars["ms_ssim"] = ms_ssim(pred, truth, sp);
            } else if (m == "norm_l2") {
                report.scalars["norm_l2"] = norm_l2(pred, truth, mp);
            }
        }
    }
    if (need_dice) {
        const LabelVolume pred = read_nifti_labels(a.pred);
        const LabelVolume truth = read_nifti_labels(a.truth);
        check_grid(pred.grid(), truth.grid(), "pred vs truth");
        grid = pred.grid();
        report.dice = dice(pred, LabelVolume(pred.grid(), std::vector<std::int32_t>(truth.labels().begin(),
                                                                                    truth.labels().end())));
    }
    report.metadata["dims"] = json::array({grid->dims[0], grid->dims[1], grid->dims[2]});
    report.metadata["spacing_mm"] = json::array({grid->spacing[0], grid->spacing[1], grid->spacing[2]});
    out << report.to_table();
    if (!a.out.empty()) {
        write_json(a.out, report.to_json());
    }
    return kExitOk;
}

GenerationConfig config_or_default(const std::string& path) {
    return path.empty() ? default_config() : load_config(path);
}

int cmd_dump_schedule(const std::string& config_path, int n, bool as_json, std::ostream& out) {
    const GenerationConfig c = config_or_default(config_path);
    const int count = n > 0 ? n : c.batch_size;
    const auto s = severity_schedule(count);
    if (as_json) {
        json rows = json::array();
        for (int i = 0; i < count; ++i) {
            json row = corruption_to_json(interpolate_corruption(c.mild, c.severe, s[std::size_t(i)]));
            row["index"] = i;
            row["severity"] = s[std::size_t(i)];
            rows.push_back(row);
        }
        out << rows.dump(2) << '\n';
        return kExitOk;
    }
    out << fmt::format("{:>5}  {:>9}  {:>11}  {:>14}  {:>21}  {:>13}  {:>15}\n", "index", "severity", "noise_sigma",
                       "bias_amplitude", "slice_spacing_mm", "gamma_log_std", "bias_spacing_mm");
    for (int i = 0; i < count; ++i) {
        const CorruptionParams p = interpolate_corruption(c.mild, c.severe, s[std::size_t(i)]);
        out << fmt::format("{:>5}  {:>9.6g}  {:>11.6g}  {:>14.6g}  {:>21}  {:>13.6g}  {:>15.6g}\n", i, s[std::size_t(i)],
                           p.noise_sigma, p.bias_amplitude,
                           fmt::format("{:g},{:g},{:g}", p.slice_spacing[0], p.slice_spacing[1], p.slice_spacing[2]),
                           p.gamma_log_std, p.bias_control_spacing);
    }
    return kExitOk;
}

int cmd_validate_config(const std::string& path, std::ostream& out) {
    const GenerationConfig c = load_config(path);
    out << fmt::format("{}: valid (config hash {})\n", path, config_hash(c));
    return kExitOk;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic brain MRI sample generator and evaluation tool", "synthvol"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate sample batches with targets and a run manifest");
    g->add_option("--config", gen.config, "Generation config (JSON)");
    g->add_option("--subjects-dir", gen.subjects_dir, "Directory of subject directories")->required();
    g->add_option("--out", gen.out, "Output directory (created; must be empty)")->required();
    g->add_option("--iterations", gen.iterations, "Number of batches")->capture_default_str();
    g->add_option("--seed", gen.seed, "Master seed override");
    g->add_option("--jobs,-j", gen.jobs, "Worker threads")->capture_default_str();
    g->add_option("--manifest", gen.manifest, "Regenerate the run described by a manifest");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Compare a prediction with a reference volume");
    e->add_option("--pred", ev.pred, "Predicted volume (NIfTI)")->required();
    e->add_option("--truth", ev.truth, "Reference volume (NIfTI)")->required();
    e->add_option("--metrics", ev.metrics, "Comma list of l1, psnr, ssim, ms_ssim, dice, norm_l2")
        ->capture_default_str();
    e->add_option("--mask", ev.mask, "Mask volume; non-zero voxels are evaluated");
    e->add_option("--out", ev.out, "Report path (JSON)");
    e->add_option("--peak", ev.peak, "Peak value for PSNR and SSIM")->capture_default_str();

    std::string sched_config;
    int sched_n = 0;
    bool sched_json = false;
    auto* d = app.add_subcommand("dump-schedule", "Print the corruption levels of each batch index");
    d->add_option("--config", sched_config, "Generation config (JSON); defaults when omitted");
    d->add_option("-n,--batch-size", sched_n, "Batch size (defaults to the config value)");
    d->add_flag("--json", sched_json, "Print JSON instead of a table");

    std::string validate_path;
    auto* v = app.add_subcommand("validate-config", "Check a generation config");
    v->add_option("--config", validate_path, "Generation config (JSON)")->required();

    auto* dc = app.add_subcommand("default-config", "Print the default generation config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& pe) {
        err << "error: " << pe.what() << '\n' << "run with --help for usage\n";
        return kExitConfig;
    }

    try {
        if (g->parsed()) {
            return cmd_generate(gen, out);
        }
        if (e->parsed()) {
            return cmd_evaluate(ev, out);
        }
        if (d->parsed()) {
            return cmd_dump_schedule(sched_config, sched_n, sched_json, out);
        }
        if (v->parsed()) {
            return cmd_validate_config(validate_path, out);
        }
        if (dc->parsed()) {
            out << config_to_json(default_config()).dump(2) << '\n';
            return kExitOk;
        }
    } catch (const SubjectLoadError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitInput;
    } catch (const ConfigError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitConfig;
    } catch (const ShapeError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitShape;
    } catch (const FormatError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitInput;
    } catch (const IoError& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitInput;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}

} // namespace synthvol
