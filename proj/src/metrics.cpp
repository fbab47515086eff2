#include "synthvol/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "synthvol/errors.hpp"

namespace synthvol {

namespace {

void check_pair(const Volume& a, const Volume& b, const char* what) {
    if (a.empty() || b.empty()) {
        throw ShapeError(fmt::format("{}: empty volume", what));
    }
    if (!a.grid().same_geometry(b.grid()) || a.channels() != b.channels()) {
        throw ShapeError(fmt::format("{}: volumes differ in grid or channel count", what));
    }
}

void check_mask(const Volume& a, const Mask* mask, const char* what) {
    if (mask && !mask->grid().same_geometry(a.grid())) {
        throw ShapeError(fmt::format("{}: mask grid does not match the volume grid", what));
    }
}

// Sum of f(a_i, b_i) over masked voxels and all channels; returns the count.
template <typename F>
std::size_t masked_sum(const Volume& a, const Volume& b, const Mask* mask, double& sum, F f) {
    const auto da = a.data();
    const auto db = b.data();
    const std::size_t n = a.voxel_count();
    std::size_t count = 0;
    sum = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        const std::size_t off = std::size_t(c) * n;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask && mask->labels()[i] == 0) {
                continue;
            }
            sum += f(double(da[off + i]), double(db[off + i]));
            ++count;
        }
    }
    return count;
}

std::vector<double> ssim_kernel(const SsimParams& p) {
    if (p.window < 1 || p.window % 2 == 0 || !(p.sigma > 0.0)) {
        throw ConfigError("ssim: window must be odd and positive, sigma > 0");
    }
    std::vector<double> k(static_cast<std::size_t>(p.window));
    const int r = p.window / 2;
    double sum = 0.0;
    for (int i = 0; i < p.window; ++i) {
        const double x = double(i - r);
        k[std::size_t(i)] = std::exp(-x * x / (2.0 * p.sigma * p.sigma));
        sum += k[std::size_t(i)];
    }
    for (double& v : k) {
        v /= sum;
    }
    return k;
}

struct Field {
    Index3 dims;
    std::vector<double> v;
};

// Valid-mode filtering with kernel k along `axis`.
Field filter_axis(const Field& in, const std::vector<double>& k, int axis) {
    const auto w = static_cast<std::int64_t>(k.size());
    Field out;
    out.dims = in.dims;
    out.dims[std::size_t(axis)] = in.dims[std::size_t(axis)] - w + 1;
    out.v.assign(std::size_t(out.dims[0] * out.dims[1] * out.dims[2]), 0.0);
    const std::int64_t stride = axis == 0 ? 1 : (axis == 1 ? in.dims[0] : in.dims[0] * in.dims[1]);
#pragma omp parallel for schedule(static)
    for (std::int64_t z = 0; z < out.dims[2]; ++z) {
        for (std::int64_t y = 0; y < out.dims[1]; ++y) {
            for (std::int64_t x = 0; x < out.dims[0]; ++x) {
                const std::int64_t src = x + in.dims[0] * (y + in.dims[1] * z);
                double s = 0.0;
                for (std::int64_t t = 0; t < w; ++t) {
                    s += k[std::size_t(t)] * in.v[std::size_t(src + t * stride)];
                }
                out.v[std::size_t(x + out.dims[0] * (y + out.dims[1] * z))] = s;
            }
        }
    }
    return out;
}

Field filter3(Field f, const std::vector<double>& k) {
    for (int a = 0; a < 3; ++a) {
        f = filter_axis(f, k, a);
    }
    return f;
}

} // namespace

double l1(const Volume& a, const Volume& b, const Mask* mask) {
    check_pair(a, b, "l1");
    check_mask(a, mask, "l1");
    double sum = 0.0;
    const std::size_t n = masked_sum(a, b, mask, sum, [](double x, double y) { return std::abs(x - y); });
    if (n == 0) {
        throw DomainError("l1: empty mask");
    }
    return sum / double(n);
}

double mse(const Volume& a, const Volume& b, const Mask* mask) {
    check_pair(a, b, "mse");
    check_mask(a, mask, "mse");
    double sum = 0.0;
    const std::size_t n = masked_sum(a, b, mask, sum, [](double x, double y) { return (x - y) * (x - y); });
    if (n == 0) {
        throw DomainError("mse: empty mask");
    }
    return sum / double(n);
}

double psnr_from_mse(double m, double peak) {
    if (!(peak > 0.0)) {
        throw DomainError("psnr: peak must be > 0");
    }
    if (m == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return 10.0 * std::log10(peak * peak / m);
}

double psnr(const Volume& a, const Volume& b, double peak, const Mask* mask) {
    return psnr_from_mse(mse(a, b, mask), peak);
}

SsimTerms ssim_terms(const Volume& a, const Volume& b, const SsimParams& p) {
    check_pair(a, b, "ssim");
    if (a.channels() != 1) {
        throw ShapeError("ssim: single-channel volumes only");
    }
    const Index3 dims = a.grid().dims;
    for (std::size_t ax = 0; ax < 3; ++ax) {
        if (dims[ax] < p.window) {
            throw DomainError(fmt::format("ssim: axis {} has {} voxels, fewer than the {}-voxel window", ax, dims[ax],
                                          p.window));
        }
    }
    if (!(p.peak > 0.0)) {
        throw DomainError("ssim: peak must be > 0");
    }
    const auto k = ssim_kernel(p);
    const std::size_t n = a.voxel_count();
    const auto da = a.data();
    const auto db = b.data();
    Field fa{dims, std::vector<double>(n)}, fb{dims, std::vector<double>(n)};
    Field faa{dims, std::vector<double>(n)}, fbb{dims, std::vector<double>(n)}, fab{dims, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = da[i], y = db[i];
        fa.v[i] = x;
        fb.v[i] = y;
        faa.v[i] = x * x;
        fbb.v[i] = y * y;
        fab.v[i] = x * y;
    }
    const Field ma = filter3(std::move(fa), k);
    const Field mb = filter3(std::move(fb), k);
    const Field maa = filter3(std::move(faa), k);
    const Field mbb = filter3(std::move(fbb), k);
    const Field mab = filter3(std::move(fab), k);

    const double c1 = (p.k1 * p.peak) * (p.k1 * p.peak);
    const double c2 = (p.k2 * p.peak) * (p.k2 * p.peak);
    double ssum = 0.0, csum = 0.0;
    const std::size_t m = ma.v.size();
    for (std::size_t i = 0; i < m; ++i) {
        const double mx = ma.v[i], my = mb.v[i];
        const double sxx = maa.v[i] - mx * mx;
        const double syy = mbb.v[i] - my * my;
        const double sxy = mab.v[i] - mx * my;
        const double cs = (2.0 * sxy + c2) / (sxx + syy + c2);
        const double l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
        ssum += l * cs;
        csum += cs;
    }
    return {ssum / double(m), csum / double(m)};
}

double ssim(const Volume& a, const Volume& b, const SsimParams& params) { return ssim_terms(a, b, params).ssim; }

Volume downsample2(const Volume& vol) {
    const VoxelGrid& g = vol.grid();
    VoxelGrid out = g;
    for (std::size_t a = 0; a < 3; ++a) {
        out.dims[a] = std::max<std::int64_t>(g.dims[a] / 2, 1);
        if (g.dims[a] >= 2) {
            out.spacing[int(a)] = g.spacing[int(a)] * 2.0;
        }
    }
    // Centre of the first 2x2x2 block.
    Vec3 first;
    for (int a = 0; a < 3; ++a) {
        first[a] = g.dims[std::size_t(a)] >= 2 ? 0.5 : 0.0;
    }
    out.origin = g.world(first);
    const int fx = g.dims[0] >= 2 ? 2 : 1, fy = g.dims[1] >= 2 ? 2 : 1, fz = g.dims[2] >= 2 ? 2 : 1;
    const double norm = 1.0 / double(fx * fy * fz);
    const std::size_t n = out.voxel_count();
    std::vector<float> data(n * std::size_t(vol.channels()));
    for (int c = 0; c < vol.channels(); ++c) {
        const auto in = vol.channel(c);
        for (std::int64_t z = 0; z < out.dims[2]; ++z) {
            for (std::int64_t y = 0; y < out.dims[1]; ++y) {
                for (std::int64_t x = 0; x < out.dims[0]; ++x) {
                    double s = 0.0;
                    for (int dz = 0; dz < fz; ++dz) {
                        for (int dy = 0; dy < fy; ++dy) {
                            for (int dx = 0; dx < fx; ++dx) {
                                s += in[g.index(x * fx + dx, y * fy + dy, z * fz + dz)];
                            }
                        }
                    }
                    data[std::size_t(c) * n + out.index(x, y, z)] = static_cast<float>(s * norm);
                }
            }
        }
    }
    return Volume(out, vol.channels(), std::move(data));
}

double ms_ssim(const Volume& a, const Volume& b, const SsimParams& p) {
    check_pair(a, b, "ms_ssim");
    if (p.scales < 1 || static_cast<int>(p.weights.size()) != p.scales) {
        throw ConfigError("ms_ssim: need one weight per scale");
    }
    const std::int64_t factor = std::int64_t(1) << (p.scales - 1);
    for (std::size_t ax = 0; ax < 3; ++ax) {
        if (a.grid().dims[ax] / factor < p.window) {
            throw DomainError(fmt::format("ms_ssim: axis {} ({} voxels) is too small for {} scales of a {}-voxel "
                                          "window (needs {})",
                                          ax, a.grid().dims[ax], p.scales, p.window, p.window * factor));
        }
    }
    Volume x = a, y = b;
    double result = 1.0;
    for (int s = 0; s < p.scales; ++s) {
        const SsimTerms t = ssim_terms(x, y, p);
        const double w = p.weights[std::size_t(s)];
        if (s + 1 == p.scales) {
            result *= std::pow(std::max(t.ssim, 0.0), w);
        } else {
            result *= std::pow(std::max(t.cs, 0.0), w);
            x = downsample2(x);
            y = downsample2(y);
        }
    }
    return result;
}

DiceResult dice(const LabelVolume& a, const LabelVolume& b) {
    if (!a.grid().same_geometry(b.grid())) {
        throw ShapeError("dice: label maps differ in grid");
    }
    std::map<std::int32_t, std::array<std::size_t, 3>> counts; // |A|, |B|, |A and B|
    const auto la = a.labels();
    const auto lb = b.labels();
    for (std::size_t i = 0; i < la.size(); ++i) {
        ++counts[la[i]][0];
        ++counts[lb[i]][1];
        if (la[i] == lb[i]) {
            ++counts[la[i]][2];
        }
    }
    DiceResult r;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [label, c] : counts) {
        const double d = 2.0 * double(c[2]) / double(c[0] + c[1]);
        r.per_label[label] = d;
        if (label != 0) {
            sum += d;
            ++n;
        }
    }
    r.mean = n ? sum / double(n) : std::numeric_limits<double>::quiet_NaN();
    return r;
}

double norm_l2(const Volume& estimate, const Volume& truth, const Mask* mask) {
    check_pair(estimate, truth, "norm_l2");
    check_mask(estimate, mask, "norm_l2");
    double se = 0.0, st = 0.0;
    const std::size_t n = masked_sum(estimate, truth, mask, se, [](double x, double) { return x; });
    masked_sum(estimate, truth, mask, st, [](double, double y) { return y; });
    if (n == 0) {
        throw DomainError("norm_l2: empty mask");
    }
    const double me = se / double(n), mt = st / double(n);
    if (!(me > 0.0) || !(mt > 0.0)) {
        throw DomainError(fmt::format("norm_l2: mask means must be > 0 (estimate {}, truth {})", me, mt));
    }
    double sq = 0.0;
    masked_sum(estimate, truth, mask, sq, [me, mt](double x, double y) {
        const double d = x / me - y / mt;
        return d * d;
    });
    return std::sqrt(sq / double(n));
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json j;
    nlohmann::json s = nlohmann::json::object();
    for (const auto& [name, v] : scalars) {
        // JSON has no infinity; identical inputs give PSNR "inf".
        s[name] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(v > 0 ? "inf" : (v < 0 ? "-inf" : "nan"));
    }
    j["metrics"] = s;
    if (dice) {
        nlohmann::json per = nlohmann::json::object();
        for (const auto& [label, v] : dice->per_label) {
            per[std::to_string(label)] = v;
        }
        j["dice"] = {{"per_label", per},
                     {"mean", std::isfinite(dice->mean) ? nlohmann::json(dice->mean) : nlohmann::json(nullptr)}};
    }
    j["metadata"] = metadata;
    return j;
}

std::string MetricReport::to_table() const {
    std::size_t width = 6;
    for (const auto& [name, v] : scalars) {
        width = std::max(width, name.size());
    }
    std::string out = fmt::format("{:<{}}  {:>12}\n", "metric", width, "value");
    for (const auto& [name, v] : scalars) {
        out += fmt::format("{:<{}}  {:>12.6g}\n", name, width, v);
    }
    if (dice) {
        out += fmt::format("\n{:<8}  {:>8}\n", "label", "dice");
        for (const auto& [label, v] : dice->per_label) {
            out += fmt::format("{:<8}  {:>8.4f}\n", label, v);
        }
        out += fmt::format("{:<8}  {:>8.4f}\n", "mean", dice->mean);
    }
    return out;
}

} // namespace synthvol
