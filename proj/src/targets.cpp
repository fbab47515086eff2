#include "synthvol/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "sampling.hpp"
#include "synthvol/errors.hpp"

namespace synthvol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared distance transform of one line. f holds squared distances already
// accumulated over earlier axes (or 0 / inf on the first pass); positions are
// q * spacing. Scratch buffers must hold n (v) and n + 1 (z) entries.
void edt_line(double* f, std::int64_t n, double spacing, std::int64_t* v, double* z, double* out) {
    std::int64_t k = -1;
    for (std::int64_t q = 0; q < n; ++q) {
        if (f[q] == kInf) {
            continue;
        }
        const double xq = double(q) * spacing;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s = 0.0;
        for (;;) {
            const double xv = double(v[k]) * spacing;
            s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * (xq - xv));
            if (s <= z[k] && k > 0) {
                --k;
                continue;
            }
            break;
        }
        if (s <= z[k]) {
            // k == 0 and the new parabola dominates everywhere.
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        return; // line stays at infinity
    }
    std::int64_t j = 0;
    for (std::int64_t p = 0; p < n; ++p) {
        const double xp = double(p) * spacing;
        while (z[j + 1] < xp) {
            ++j;
        }
        const double d = double(p - v[j]) * spacing;
        out[p] = f[v[j]] + d * d;
    }
    std::copy(out, out + n, f);
}

void edt_pass(std::vector<double>& field, const Index3& dims, int axis, double spacing) {
    const std::int64_t n = dims[static_cast<std::size_t>(axis)];
    const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? dims[0] : dims[0] * dims[1]);
    const int a1 = axis == 0 ? 1 : 0;
    const int a2 = axis == 2 ? 1 : 2;
    const std::int64_t d1 = dims[static_cast<std::size_t>(a1)];
    const std::int64_t s1 = a1 == 0 ? 1 : dims[0];
    const std::int64_t s2 = a2 == 1 ? dims[0] : dims[0] * dims[1];
    const std::int64_t lines = d1 * dims[static_cast<std::size_t>(a2)];

#pragma omp parallel
    {
        std::vector<double> line(static_cast<std::size_t>(n));
        std::vector<double> out(static_cast<std::size_t>(n));
        std::vector<double> z(static_cast<std::size_t>(n + 1));
        std::vector<std::int64_t> v(static_cast<std::size_t>(n));
#pragma omp for schedule(static)
        for (std::int64_t l = 0; l < lines; ++l) {
            const std::int64_t base = (l % d1) * s1 + (l / d1) * s2;
            for (std::int64_t p = 0; p < n; ++p) {
                line[std::size_t(p)] = field[std::size_t(base + p * stride)];
            }
            edt_line(line.data(), n, spacing, v.data(), z.data(), out.data());
            for (std::int64_t p = 0; p < n; ++p) {
                field[std::size_t(base + p * stride)] = line[std::size_t(p)];
            }
        }
    }
}

} // namespace

void Subject::validate() const {
    if (labels.empty()) {
        throw ShapeError(fmt::format("subject {}: missing label map", id));
    }
    for (const auto& [name, vol] : reals) {
        if (!vol.grid().same_geometry(labels.grid())) {
            throw ShapeError(fmt::format("subject {}: {} grid does not match the label grid", id, name));
        }
    }
}

Volume distance_map(const LabelVolume& labels, const std::vector<std::int32_t>& foreground, bool signed_distance) {
    const VoxelGrid& g = labels.grid();
    const auto in = labels.labels();
    const std::size_t n = in.size();
    std::vector<std::int32_t> fg_sorted(foreground);
    std::sort(fg_sorted.begin(), fg_sorted.end());
    std::vector<char> is_fg(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
        is_fg[i] = std::binary_search(fg_sorted.begin(), fg_sorted.end(), in[i]) ? 1 : 0;
        any = any || is_fg[i];
    }
    if (!any) {
        throw DomainError("distance_map: no voxel carries a foreground label");
    }

    std::vector<double> field(n, kInf);
    std::vector<char> boundary(n, 0);
    for (std::int64_t k = 0; k < g.dims[2]; ++k) {
        for (std::int64_t j = 0; j < g.dims[1]; ++j) {
            for (std::int64_t i = 0; i < g.dims[0]; ++i) {
                const std::size_t o = g.index(i, j, k);
                if (!is_fg[o]) {
                    continue;
                }
                const std::int64_t idx[3] = {i, j, k};
                bool edge = false;
                for (int a = 0; a < 3 && !edge; ++a) {
                    for (int dir = -1; dir <= 1 && !edge; dir += 2) {
                        std::int64_t nb[3] = {i, j, k};
                        nb[a] = idx[a] + dir;
                        if (nb[a] < 0 || nb[a] >= g.dims[static_cast<std::size_t>(a)]) {
                            edge = true;
                        } else if (!is_fg[g.index(nb[0], nb[1], nb[2])]) {
                            edge = true;
                        }
                    }
                }
                if (edge) {
                    boundary[o] = 1;
                    field[o] = 0.0;
                }
            }
        }
    }
    for (int a = 0; a < 3; ++a) {
        edt_pass(field, g.dims, a, g.spacing[a]);
    }
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        float d = static_cast<float>(std::sqrt(field[i]));
        if (signed_distance && is_fg[i] && !boundary[i]) {
            d = -d;
        }
        out[i] = d;
    }
    return Volume(g, 1, std::move(out));
}

Volume distance_map(const LabelVolume& labels, bool signed_distance) {
    std::vector<std::int32_t> fg;
    for (std::int32_t l : labels.label_set()) {
        if (l != 0) {
            fg.push_back(l);
        }
    }
    return distance_map(labels, fg, signed_distance);
}

AtlasBox atlas_box_for(const VoxelGrid& grid, const Mat4& atlas_transform) {
    AtlasBox box;
    box.lo = Vec3::Constant(kInf);
    box.hi = Vec3::Constant(-kInf);
    for (int c = 0; c < 8; ++c) {
        const Vec3 corner((c & 1) ? double(grid.dims[0] - 1) : 0.0, (c & 2) ? double(grid.dims[1] - 1) : 0.0,
                          (c & 4) ? double(grid.dims[2] - 1) : 0.0);
        const Vec3 w = grid.world(corner);
        const Vec3 t = (atlas_transform * w.homogeneous()).head<3>();
        box.lo = box.lo.cwiseMin(t);
        box.hi = box.hi.cwiseMax(t);
    }
    // Degenerate axes (single-voxel extent) get a unit box around the value.
    for (int a = 0; a < 3; ++a) {
        if (!(box.hi[a] > box.lo[a])) {
            box.lo[a] -= 0.5;
            box.hi[a] += 0.5;
        }
    }
    return box;
}

Volume atlas_coordinate_target(const DeformationField& phi, const Mat4& atlas_transform, const AtlasBox& box) {
    for (int a = 0; a < 3; ++a) {
        if (!(box.hi[a] > box.lo[a])) {
            throw DomainError(fmt::format("atlas box axis {} is empty", a));
        }
    }
    const std::size_t n = phi.grid.voxel_count();
    const float* c[3] = {phi.coords.channel(0).data(), phi.coords.channel(1).data(), phi.coords.channel(2).data()};
    Mat4 norm = Mat4::Identity();
    for (int a = 0; a < 3; ++a) {
        norm(a, a) = 2.0 / (box.hi[a] - box.lo[a]);
        norm(a, 3) = -2.0 * box.lo[a] / (box.hi[a] - box.lo[a]) - 1.0;
    }
    const Mat4 m = norm * atlas_transform;
    std::vector<float> out(3 * n);
#pragma omp parallel for schedule(static)
    for (std::int64_t o = 0; o < static_cast<std::int64_t>(n); ++o) {
        const double x = c[0][o], y = c[1][o], z = c[2][o];
        for (int r = 0; r < 3; ++r) {
            out[std::size_t(r) * n + std::size_t(o)] =
                static_cast<float>(m(r, 0) * x + m(r, 1) * y + m(r, 2) * z + m(r, 3));
        }
    }
    return Volume(phi.grid, 3, std::move(out));
}

std::vector<std::int32_t> default_segmentation_labels() {
    // Cerebral WM/cortex, lateral ventricles, cerebellar WM/cortex, thalamus,
    // caudate, putamen, pallidum, hippocampus, amygdala, accumbens, ventral
    // DC, vessel, choroid plexus (left, right); 3rd/4th ventricle, brainstem,
    // CSF.
    return {2,  3,  4,  7,  8,  10, 11, 12, 13, 14, 15, 16, 17, 18, 24,
            26, 28, 41, 42, 43, 46, 47, 49, 50, 51, 52, 53, 54, 58, 60};
}

std::vector<DistanceTarget> default_distance_targets() {
    return {
        DistanceTarget{"brain", {}, false},
        DistanceTarget{"cortex", {3, 42}, false},
    };
}

LabelVolume restrict_labels(const LabelVolume& labels, const std::vector<std::int32_t>& keep) {
    if (keep.empty()) {
        return labels;
    }
    std::vector<std::int32_t> sorted(keep);
    std::sort(sorted.begin(), sorted.end());
    const auto in = labels.labels();
    std::vector<std::int32_t> out(in.size());
    // label_set is small; decide once per label.
    std::map<std::int32_t, std::int32_t> remap;
    for (std::int32_t l : labels.label_set()) {
        remap[l] = std::binary_search(sorted.begin(), sorted.end(), l) ? l : 0;
    }
    bool identity = true;
    for (const auto& [from, to] : remap) {
        identity = identity && from == to;
    }
    if (identity) {
        return labels;
    }
    for (std::size_t i = 0; i < in.size(); ++i) {
        out[i] = remap.at(in[i]);
    }
    return LabelVolume(labels.grid(), std::move(out));
}

TargetSet assemble_shared_targets(const Subject& subject, const DeformationField& phi, const TargetOptions& options) {
    subject.validate();
    TargetSet t;
    t.seg = restrict_labels(warp_labels(subject.labels, phi), options.segmentation_labels);
    for (const std::string& m : kModalities) {
        const auto it = subject.reals.find(m);
        if (it == subject.reals.end()) {
            t.absent.push_back(m);
            continue;
        }
        t.modality_targets[m] = warp_image(it->second, phi);
    }
    for (const auto& [name, vol] : subject.reals) {
        if (!t.modality_targets.count(name) &&
            std::find(kModalities.begin(), kModalities.end(), name) == kModalities.end()) {
            t.modality_targets[name] = warp_image(vol, phi);
        }
    }
    for (const DistanceTarget& d : options.distance_targets) {
        std::vector<std::int32_t> fg = d.labels;
        if (fg.empty()) {
            for (std::int32_t l : t.seg.label_set()) {
                if (l != 0) {
                    fg.push_back(l);
                }
            }
        }
        const bool present = std::any_of(fg.begin(), fg.end(), [&](std::int32_t l) { return t.seg.contains_label(l); });
        if (!present) {
            t.absent.push_back("dist_" + d.name);
            continue;
        }
        t.dist[d.name] = distance_map(t.seg, fg, d.signed_distance);
    }
    const Mat4 atlas = subject.atlas_transform.value_or(Mat4::Identity());
    const AtlasBox box = options.atlas_box.value_or(atlas_box_for(subject.labels.grid(), atlas));
    t.atlas_coords = atlas_coordinate_target(phi, atlas, box);
    return t;
}

TargetSet assemble_targets(const Subject& subject, const DeformationField& phi, const Volume& bias_field,
                           const TargetOptions& options) {
    TargetSet t = assemble_shared_targets(subject, phi, options);
    if (!bias_field.grid().same_geometry(phi.grid)) {
        throw ShapeError("assemble_targets: bias field is not on the sample grid");
    }
    t.bias_gt = bias_field;
    return t;
}

} // namespace synthvol
