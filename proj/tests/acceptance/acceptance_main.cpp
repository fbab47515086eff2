// Acceptance suite: one PASS/FAIL line per criterion, measured values shown.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>
#include <omp.h>

#include "../oracles.hpp"
#include "synthvol/appearance.hpp"
#include "synthvol/cli.hpp"
#include "synthvol/config.hpp"
#include "synthvol/deform.hpp"
#include "synthvol/export.hpp"
#include "synthvol/metrics.hpp"
#include "synthvol/nifti.hpp"
#include "synthvol/rng.hpp"
#include "synthvol/scheduler.hpp"
#include "synthvol/targets.hpp"

namespace fs = std::filesystem;
using namespace synthvol;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / fmt::format("synthvol_accept_{}_{}", name, ::getpid());
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
    std::vector<const char*> argv{"synthvol"};
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = run_cli(int(argv.size()), argv.data(), out, err);
    if (out_text) {
        *out_text = out.str();
    }
    if (code != 0) {
        std::cerr << err.str();
    }
    return code;
}

// ---------------------------------------------------------------------------

Outcome severity_anchor() {
    const auto t0 = Clock::now();
    std::string text;
    std::vector<double> n4, n1;
    if (cli({"dump-schedule", "-n", "4", "--json"}, &text) != 0) {
        return {false, "dump-schedule N=4 failed"};
    }
    for (const auto& row : json::parse(text)) {
        n4.push_back(row.at("noise_sigma").get<double>());
    }
    if (cli({"dump-schedule", "-n", "1", "--json"}, &text) != 0) {
        return {false, "dump-schedule N=1 failed"};
    }
    for (const auto& row : json::parse(text)) {
        n1.push_back(row.at("noise_sigma").get<double>());
    }
    const GenerationConfig c = default_config();
    const double medium = interpolate_corruption(c.mild, c.severe, 4.0 / 9.0).noise_sigma;
    const double dt = seconds_since(t0);
    const bool ok = n4 == std::vector<double>{1, 4, 7, 10} && n1 == std::vector<double>{5.5} && medium == 5.0 &&
                    dt < 1.0;
    return {ok, fmt::format("N=4 [{}], N=1 [{}], s=4/9 -> {}, {:.3f} s", fmt::join(n4, ", "), fmt::join(n1, ", "),
                            medium, dt)};
}

Outcome svf_exponential() {
    const auto t0 = Clock::now();
    const VoxelGrid g = VoxelGrid::make({64, 64, 64});
    const std::size_t n = g.voxel_count();
    const Vec3 c = g.center_world();
    // Interior: 8 voxels from every face, twice the largest displacement of
    // the rotation field inside the grid.
    const int margin = 8;
    const auto interior = [&](const Index3& p) {
        for (int a = 0; a < 3; ++a) {
            if (p[std::size_t(a)] < margin || p[std::size_t(a)] >= g.dims[std::size_t(a)] - margin) {
                return false;
            }
        }
        return true;
    };

    VelocityField tv{g, Volume(g, 3, [&] {
                         std::vector<float> d(3 * n, 0.0f);
                         std::fill(d.begin(), d.begin() + std::ptrdiff_t(n), 3.0f);
                         return d;
                     }()),
                     16.0, 3.0};
    const Volume ut = integrate_svf(tv, 7);
    double terr = 0.0;
    for (std::size_t o = 0; o < n; ++o) {
        if (!interior(g.unravel(o))) {
            continue;
        }
        const Vec3 u(ut.channel(0)[o], ut.channel(1)[o], ut.channel(2)[o]);
        terr = std::max(terr, (u - Vec3(3, 0, 0)).norm());
    }

    const double theta = 5.0 * M_PI / 180.0;
    Mat3 w = Mat3::Zero();
    w(0, 1) = -theta;
    w(1, 0) = theta;
    std::vector<float> rv(3 * n);
    for (std::size_t o = 0; o < n; ++o) {
        const Vec3 v = w * (g.world(Vec3(g.unravel(o)[0], g.unravel(o)[1], g.unravel(o)[2])) - c);
        for (int a = 0; a < 3; ++a) {
            rv[std::size_t(a) * n + o] = float(v[a]);
        }
    }
    VelocityField rot{g, Volume(g, 3, rv), 16.0, 0.0};
    const Volume ur = integrate_svf(rot, 7);
    const Mat3 r = oracle::matrix_exp(w);
    double rerr = 0.0;
    for (std::size_t o = 0; o < n; ++o) {
        const Index3 p = g.unravel(o);
        if (!interior(p)) {
            continue;
        }
        const Vec3 x = g.world(Vec3(p[0], p[1], p[2])) - c;
        const Vec3 expect = r * x - x;
        const Vec3 u(ur.channel(0)[o], ur.channel(1)[o], ur.channel(2)[o]);
        rerr = std::max(rerr, (u - expect).norm());
    }
    const double dt = seconds_since(t0);
    const bool ok = terr <= 1e-4 && rerr <= 1e-3 && dt < 10.0;
    return {ok, fmt::format("translation {:.3g} mm (<= 1e-4), rotation {:.3g} voxel (<= 1e-3), 7 steps, "
                            "interior margin {}, {:.2f} s",
                            terr, rerr, margin, dt)};
}

Outcome diffeomorphism_sweep() {
    const auto t0 = Clock::now();
    const VoxelGrid g = VoxelGrid::make({128, 128, 128});
    const DeformationRanges ranges;
    double worst = std::numeric_limits<double>::infinity();
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const DeformationField phi = sample_deformation(Rng(seed), ranges, g, g.center_world());
        const Volume j = jacobian_determinant(phi);
        double mn = std::numeric_limits<double>::infinity();
        for (std::int64_t z = 1; z < g.dims[2] - 1; ++z) {
            for (std::int64_t y = 1; y < g.dims[1] - 1; ++y) {
                for (std::int64_t x = 1; x < g.dims[0] - 1; ++x) {
                    mn = std::min(mn, double(j.at(x, y, z)));
                }
            }
        }
        worst = std::min(worst, mn);
        failures += mn > 0.0 ? 0 : 1;
    }
    const double dt = seconds_since(t0);
    return {failures == 0 && dt < 300.0,
            fmt::format("100 seeds on 128^3: min interior det J = {:.4f}, {} non-positive, {:.1f} s", worst, failures,
                        dt)};
}

Outcome exact_edt() {
    const auto t0 = Clock::now();
    std::mt19937_64 gen(20240611);
    int mismatched_runs = 0;
    std::size_t voxels = 0, skipped = 0;
    for (int run = 0; run < 100; ++run) {
        std::uniform_int_distribution<int> dim(1, 16);
        const Index3 dims{dim(gen), dim(gen), dim(gen)};
        Vec3 spacing;
        for (int a = 0; a < 3; ++a) {
            // Even runs: arbitrary reals; odd runs: multiples of 1/16 mm.
            spacing[a] = run % 2 == 0 ? std::uniform_real_distribution<double>(0.3, 3.0)(gen)
                                      : double(std::uniform_int_distribution<int>(5, 48)(gen)) / 16.0;
        }
        const double density = std::uniform_real_distribution<double>(0.05, 0.95)(gen);
        const VoxelGrid g = VoxelGrid::make(dims, spacing);
        std::vector<std::int32_t> lab(g.voxel_count());
        std::bernoulli_distribution fg(density);
        std::uniform_int_distribution<int> label(1, 3);
        bool any = false;
        for (auto& l : lab) {
            l = fg(gen) ? label(gen) : 0;
            any = any || l == 1 || l == 2;
        }
        if (!any) {
            lab[0] = 1;
        }
        const LabelVolume lv(g, lab);
        const std::vector<std::int32_t> fset{1, 2};
        const bool signed_mode = run % 3 == 0;
        const Volume d = distance_map(lv, fset, signed_mode);
        const auto ref = oracle::brute_force_edt(lv, fset, signed_mode);
        voxels += ref.size();
        if (std::memcmp(d.data().data(), ref.data(), ref.size() * sizeof(float)) != 0) {
            ++mismatched_runs;
        }
    }
    (void)skipped;
    const double dt = seconds_since(t0);
    return {mismatched_runs == 0 && dt < 60.0,
            fmt::format("100 masks ({} voxels), anisotropic spacings, {} runs differ at bit level, {:.2f} s", voxels,
                        mismatched_runs, dt)};
}

Outcome metric_oracles() {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    const VoxelGrid g = VoxelGrid::make({32, 32, 32});
    double ssim_err = 0.0;
    for (int pair = 0; pair < 3; ++pair) {
        std::vector<float> a(g.voxel_count()), b(g.voxel_count());
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = u(gen);
            b[i] = std::clamp(a[i] + 0.3f * (u(gen) - 0.5f), 0.0f, 1.0f);
        }
        const Volume va(g, 1, a), vb(g, 1, b);
        ssim_err = std::max(ssim_err, std::abs(ssim(va, vb) - oracle::direct_ssim(va, vb)));
    }

    // Dice hand counts on a 4x1x1 line.
    const VoxelGrid line = VoxelGrid::make({4, 1, 1});
    const auto d1 = dice(LabelVolume(line, {1, 1, 0, 0}), LabelVolume(line, {1, 0, 1, 0}));
    const auto d2 = dice(LabelVolume(line, {1, 1, 0, 0}), LabelVolume(line, {0, 0, 2, 2}));
    const auto d3 = dice(LabelVolume(line, {1, 2, 3, 0}), LabelVolume(line, {1, 2, 3, 0}));
    const bool dice_ok = d1.per_label.at(1) == 0.5 && d2.per_label.at(1) == 0.0 && d2.per_label.at(2) == 0.0 &&
                         d3.mean == 1.0 && d1.mean == 0.5;

    // Scale invariance: norm_l2(c f, f) on a positive random field. c f is
    // stored in float32, so zero is reached up to that rounding.
    std::vector<float> f(g.voxel_count());
    for (auto& v : f) {
        v = 0.5f + u(gen);
    }
    double nl2 = 0.0;
    for (double c : {0.1, 1.0, 3.0}) {
        std::vector<float> cf(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) {
            cf[i] = float(c * f[i]);
        }
        nl2 = std::max(nl2, norm_l2(Volume(g, 1, cf), Volume(g, 1, f)));
    }
    const double nl2_unit = norm_l2(Volume(g, 1, f), Volume(g, 1, f));

    // PSNR: |a - b| = 0.125 everywhere with peak 1.25 gives MSE = peak^2 / 100.
    const Volume pa = Volume::filled(g, 1, 0.5f), pb = Volume::filled(g, 1, 0.625f);
    const double p1 = psnr(pa, pb, 1.25);
    const double p2 = psnr_from_mse(0.01, 1.0);
    const bool ok = ssim_err <= 1e-5 && dice_ok && nl2 <= 1e-6 && nl2_unit == 0.0 && p1 == 20.0 && p2 == 20.0;
    return {ok, fmt::format("SSIM |lib - direct| {:.2e} (<= 1e-5), Dice hand counts {}, norm_l2(c f, f) max {:.2e} "
                            "(c=1: {}), PSNR {} / {} dB",
                            ssim_err, dice_ok ? "exact" : "WRONG", nl2, nl2_unit, p1, p2)};
}

Outcome contrast_statistics() {
    const VoxelGrid g = VoxelGrid::make({64, 64, 64});
    const LabelVolume lab(g, std::vector<std::int32_t>(g.voxel_count(), 7));
    const std::map<std::int32_t, LabelDraw> draws{{7, LabelDraw{0.5, 0.1}}};
    double worst_mean = 0.0, worst_std = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Volume v = paint_labels(lab, Rng(seed), draws);
        double s = 0.0, s2 = 0.0;
        for (float x : v.data()) {
            s += x;
        }
        const double mean = s / double(v.voxel_count());
        for (float x : v.data()) {
            s2 += (x - mean) * (x - mean);
        }
        const double sd = std::sqrt(s2 / double(v.voxel_count() - 1));
        worst_mean = std::max(worst_mean, std::abs(mean - 0.5));
        worst_std = std::max(worst_std, std::abs(sd - 0.1));
    }
    return {worst_mean <= 0.002 && worst_std <= 0.005,
            fmt::format("50 seeds: max |mean - 0.5| = {:.2e} (<= 0.002), max |std - 0.1| = {:.2e} (<= 0.005)",
                        worst_mean, worst_std)};
}

std::map<std::string, std::string> tree_digest(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) {
            continue;
        }
        std::ifstream in(e.path(), std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        out[fs::relative(e.path(), root).string()] =
            fmt::format("{:016x}:{}", fnv1a64(bytes), bytes.size());
    }
    return out;
}

Outcome determinism() {
    const auto t0 = Clock::now();
    const fs::path dir = scratch_dir("determinism");
    oracle::write_phantom_subject(dir / "subjects" / "sub-01", {64, 64, 64}, true);
    oracle::write_phantom_subject(dir / "subjects" / "sub-02", {56, 64, 60}, false, Vec3(1.0, 1.0, 1.2));
    GenerationConfig c = default_config();
    c.patch_size = Index3{48, 48, 48};
    c.master_seed = 1234;
    write_json(dir / "config.json", config_to_json(c));
    const std::string subjects = (dir / "subjects").string();
    int rc = cli({"generate", "--config", (dir / "config.json").string(), "--subjects-dir", subjects, "--out",
                  (dir / "run_a").string(), "--iterations", "3", "--jobs", "1"});
    rc |= cli({"generate", "--manifest", (dir / "run_a" / "manifest.json").string(), "--subjects-dir", subjects,
               "--out", (dir / "run_b").string(), "--jobs", "1"});
    rc |= cli({"generate", "--manifest", (dir / "run_a" / "manifest.json").string(), "--subjects-dir", subjects,
               "--out", (dir / "run_c").string(), "--jobs", "8"});
    rc |= cli({"generate", "--config", (dir / "config.json").string(), "--subjects-dir", subjects, "--out",
               (dir / "run_d").string(), "--iterations", "3", "--jobs", "8"});
    if (rc != 0) {
        return {false, "generate failed"};
    }
    const auto a = tree_digest(dir / "run_a");
    const bool same = a == tree_digest(dir / "run_b") && a == tree_digest(dir / "run_c") &&
                      a == tree_digest(dir / "run_d");
    const double dt = seconds_since(t0);
    fs::remove_all(dir);
    return {same && dt < 120.0 && a.size() > 10,
            fmt::format("2 subjects, 3 batches x 4 samples, {} files; manifest rerun and --jobs 1 vs 8 {}, {:.1f} s",
                        a.size(), same ? "byte-identical" : "DIFFER", dt)};
}

Outcome mixup_range_closure() {
    std::mt19937_64 gen(99);
    const Subject s = oracle::phantom_subject({64, 64, 64});
    GenerationConfig c = default_config();
    c.patch_size = Index3{48, 48, 48};
    c.master_seed = 5;
    c.mild.gamma_log_std = 0.1;
    c.severe.gamma_log_std = 0.3;
    std::size_t violations = 0, checked = 0, out_of_range = 0;
    for (std::int64_t it = 0; it < 3; ++it) {
        const auto batch = generate_batch(s, c, it);
        for (const auto& b : batch) {
            for (const Volume* v : {&b.input, &b.clean}) {
                for (float x : v->data()) {
                    out_of_range += (x >= 0.0f && x <= 1.0f) ? 0 : 1;
                }
            }
            for (const auto& [name, v] : b.targets.modality_targets) {
                for (float x : v.data()) {
                    out_of_range += (x >= 0.0f && x <= 1.0f) ? 0 : 1;
                }
            }
        }
        // Convex bounds on 1000 random voxels of a fresh mix.
        const auto& b = batch.front();
        const Volume& real = b.targets.modality_targets.at("t1w");
        const Volume synth = paint_contrast(b.targets.seg, Rng(std::uint64_t(it)), c.contrast).image;
        const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
        const Volume mixed = mixup(synth, real, lambda);
        std::uniform_int_distribution<std::size_t> pick(0, mixed.voxel_count() - 1);
        for (int k = 0; k < 1000 / 3 + 1; ++k) {
            const std::size_t i = pick(gen);
            const float lo = std::min(synth.data()[i], real.data()[i]);
            const float hi = std::max(synth.data()[i], real.data()[i]);
            violations += (mixed.data()[i] >= lo && mixed.data()[i] <= hi) ? 0 : 1;
            ++checked;
        }
    }
    return {violations == 0 && out_of_range == 0,
            fmt::format("{} random voxels, {} outside [min, max]; {} pipeline values outside [0, 1]", checked,
                        violations, out_of_range)};
}

Outcome nifti_roundtrip() {
    const fs::path dir = scratch_dir("nifti");
    std::mt19937_64 gen(3);
    const VoxelGrid g = VoxelGrid::make({7, 5, 3}, Vec3(0.9, 1.1, 2.5), Vec3(-10, 4, 2));
    int failures = 0, cases = 0;
    for (NiftiDatatype dt : {NiftiDatatype::uint8, NiftiDatatype::int16, NiftiDatatype::int32, NiftiDatatype::float32,
                             NiftiDatatype::float64}) {
        for (const char* ext : {".nii", ".nii.gz"}) {
            std::vector<float> v(g.voxel_count() * 2);
            for (auto& x : v) {
                switch (dt) {
                case NiftiDatatype::uint8: x = float(std::uniform_int_distribution<int>(0, 255)(gen)); break;
                case NiftiDatatype::int16: x = float(std::uniform_int_distribution<int>(-32768, 32767)(gen)); break;
                case NiftiDatatype::int32:
                    x = float(std::uniform_int_distribution<int>(-(1 << 24), 1 << 24)(gen));
                    break;
                default: x = std::uniform_real_distribution<float>(-1e6f, 1e6f)(gen);
                }
            }
            const Volume vol(g, 2, v);
            const fs::path p = dir / (to_string(dt) + ext);
            write_nifti(p, vol, dt);
            const NiftiImage img = read_nifti_image(p);
            // Expected payload, encoded independently.
            std::vector<std::uint8_t> expect;
            for (float x : v) {
                std::uint8_t buf[8];
                std::size_t nb = 0;
                switch (dt) {
                case NiftiDatatype::uint8: buf[0] = std::uint8_t(x); nb = 1; break;
                case NiftiDatatype::int16: { const auto t = std::int16_t(x); std::memcpy(buf, &t, 2); nb = 2; break; }
                case NiftiDatatype::int32: { const auto t = std::int32_t(x); std::memcpy(buf, &t, 4); nb = 4; break; }
                case NiftiDatatype::float32: std::memcpy(buf, &x, 4); nb = 4; break;
                case NiftiDatatype::float64: { const double t = x; std::memcpy(buf, &t, 8); nb = 8; break; }
                }
                expect.insert(expect.end(), buf, buf + nb);
            }
            const Volume back = read_nifti(p);
            const bool ok = img.payload == expect && img.datatype() == dt && back.channels() == 2 &&
                            std::memcmp(back.data().data(), v.data(), v.size() * 4) == 0 &&
                            back.grid().same_geometry(g, 1e-5);
            failures += ok ? 0 : 1;
            ++cases;
        }
    }
    fs::remove_all(dir);
    return {failures == 0, fmt::format("{} datatype x compression cases, {} not bit-exact", cases, failures)};
}

Outcome target_consistency() {
    const fs::path dir = scratch_dir("targets");
    const Subject s = oracle::phantom_subject({64, 64, 64});
    GenerationConfig c = default_config();
    c.patch_size = Index3{56, 56, 56};
    c.master_seed = 77;
    c.targets.distance_targets.push_back(DistanceTarget{"brain_signed", {}, true});
    const auto batch = generate_batch(s, c, 0);
    int dist_mismatch = 0, dist_checked = 0;
    double atlas_err = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const fs::path sd = dir / fmt::format("sample_{:02d}", i);
        write_bundle(sd, batch[i]);
        const LabelVolume seg = read_nifti_labels(sd / "targets" / "seg.nii.gz");
        for (const auto& dt : c.targets.distance_targets) {
            const fs::path p = sd / "targets" / ("dist_" + dt.name + ".nii.gz");
            if (!fs::exists(p)) {
                continue;
            }
            std::vector<std::int32_t> fg = dt.labels;
            if (fg.empty()) {
                for (auto l : seg.label_set()) {
                    if (l) {
                        fg.push_back(l);
                    }
                }
            }
            const Volume emitted = read_nifti(p);
            const Volume again = distance_map(seg, fg, dt.signed_distance);
            dist_mismatch +=
                std::memcmp(emitted.data().data(), again.data().data(), emitted.data().size() * 4) == 0 ? 0 : 1;
            ++dist_checked;
        }
    }
    // Atlas oracle: normalised atlas coordinates of every subject voxel,
    // pulled through phi with the ordinary image warp.
    const auto& b = batch.front();
    const Mat4 t = Mat4::Identity();
    const AtlasBox box = atlas_box_for(s.labels.grid(), t);
    const VoxelGrid& sg = s.labels.grid();
    std::vector<float> cv(3 * sg.voxel_count());
    for (std::size_t o = 0; o < sg.voxel_count(); ++o) {
        const Index3 p = sg.unravel(o);
        const Vec3 w = sg.world(Vec3(p[0], p[1], p[2]));
        for (int a = 0; a < 3; ++a) {
            cv[std::size_t(a) * sg.voxel_count() + o] = float(2.0 * (w[a] - box.lo[a]) / (box.hi[a] - box.lo[a]) - 1);
        }
    }
    const DeformationField phi = [&] {
        // Rebuild phi from the batch stream exactly as the scheduler does.
        const Rng root = batch_stream(c.master_seed, s.id, 0);
        const VoxelGrid patch = sg.crop(b.provenance.patch_offset, b.provenance.patch_size);
        return sample_deformation(root.derive("deformation"), c.deformation, patch, sg.center_world());
    }();
    const Volume warped = warp_image(Volume(sg, 3, cv), phi);
    for (std::size_t o = 0; o < phi.grid.voxel_count(); ++o) {
        const Vec3 src(phi.coords.channel(0)[o], phi.coords.channel(1)[o], phi.coords.channel(2)[o]);
        const Vec3 ci = sg.continuous_index(src);
        bool inside = true;
        for (int a = 0; a < 3; ++a) {
            inside = inside && ci[a] >= 0 && ci[a] <= double(sg.dims[std::size_t(a)] - 1);
        }
        if (!inside) {
            continue;
        }
        for (int a = 0; a < 3; ++a) {
            atlas_err = std::max(atlas_err, double(std::abs(warped.channel(a)[o] - b.targets.atlas_coords.channel(a)[o])));
        }
    }
    fs::remove_all(dir);
    return {dist_mismatch == 0 && dist_checked > 0 && atlas_err <= 1e-3,
            fmt::format("{} emitted distance maps recomputed, {} differ; atlas coords vs warp oracle {:.2e} (<= 1e-3)",
                        dist_checked, dist_mismatch, atlas_err)};
}

Outcome throughput() {
    const Subject s = oracle::phantom_subject({160, 160, 160});
    GenerationConfig c = default_config();
    c.master_seed = 11;
    std::vector<SampleBundle> warm;
    const int hw = omp_get_num_procs();
    double t1 = 0.0, t8 = 0.0;
    {
        omp_set_num_threads(1);
        const auto t0 = Clock::now();
        warm = generate_batch(s, c, 0);
        t1 = seconds_since(t0);
    }
    {
        omp_set_num_threads(8);
        const auto t0 = Clock::now();
        const auto b = generate_batch(s, c, 0);
        t8 = seconds_since(t0);
    }
    omp_set_num_threads(omp_get_num_procs());
    return {t1 <= 10.0 && t8 <= 3.0,
            fmt::format("N=4 batch of 128^3 with targets: {:.2f} s at 1 thread (<= 10), {:.2f} s at 8 threads (<= 3); "
                        "{} hardware thread(s) available",
                        t1, t8, hw)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"severity-schedule-anchor", severity_anchor},
        {"svf-exponential", svf_exponential},
        {"diffeomorphism-sweep", diffeomorphism_sweep},
        {"exact-edt", exact_edt},
        {"metric-oracles", metric_oracles},
        {"contrast-statistics", contrast_statistics},
        {"determinism", determinism},
        {"mixup-range-closure", mixup_range_closure},
        {"nifti-roundtrip", nifti_roundtrip},
        {"target-consistency", target_consistency},
        {"throughput", throughput},
    };
    std::string only = argc > 1 ? argv[1] : "";
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && name != only) {
            continue;
        }
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        std::cout << fmt::format("{}  {:<26} {}", o.pass ? "PASS" : "FAIL", name, o.detail) << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
