#include "synthvol/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "synthvol/errors.hpp"

namespace synthvol {

using nlohmann::json;

namespace {

// Walks a JSON object, recording type errors and unknown keys against the
// dotted path instead of throwing on the first one.
class Reader {
public:
    Reader(const json& node, std::string path, std::vector<std::string>& issues)
        : node_(node), path_(std::move(path)), issues_(issues) {
        if (!node_.is_object()) {
            issue(path_, "expected an object");
            ok_ = false;
        }
    }

    ~Reader() {
        if (!ok_) {
            return;
        }
        for (const auto& item : node_.items()) {
            if (!seen_.count(item.key())) {
                issue(child(item.key()), "unknown field");
            }
        }
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        if (!ok_) {
            return nullptr;
        }
        const auto it = node_.find(key);
        return it == node_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const json* v = get(key)) {
            if (v->is_number()) {
                out = v->get<double>();
            } else {
                issue(child(key), "expected a number");
            }
        }
    }

    void integer(const std::string& key, std::int64_t& out) {
        if (const json* v = get(key)) {
            if (v->is_number_integer()) {
                out = v->get<std::int64_t>();
            } else {
                issue(child(key), "expected an integer");
            }
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = get(key)) {
            if (v->is_boolean()) {
                out = v->get<bool>();
            } else {
                issue(child(key), "expected true or false");
            }
        }
    }

    void range(const std::string& key, Range& out) {
        if (const json* v = get(key)) {
            if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number()) {
                out = Range{(*v)[0].get<double>(), (*v)[1].get<double>()};
            } else {
                issue(child(key), "expected [lo, hi]");
            }
        }
    }

    void vec3(const std::string& key, Vec3& out) {
        if (const json* v = get(key)) {
            if (v->is_array() && v->size() == 3 && (*v)[0].is_number() && (*v)[1].is_number() && (*v)[2].is_number()) {
                out = Vec3((*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>());
            } else {
                issue(child(key), "expected an array of 3 numbers");
            }
        }
    }

    void labels(const std::string& key, std::vector<std::int32_t>& out) {
        if (const json* v = get(key)) {
            const std::string p = child(key);
            if (!v->is_array()) {
                issue(p, "expected an array of labels");
                return;
            }
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                const json& e = (*v)[i];
                if (!e.is_number_integer() || e.get<std::int64_t>() < 0 || e.get<std::int64_t>() > INT32_MAX) {
                    issue(fmt::format("{}[{}]", p, i), "expected a non-negative integer label");
                    continue;
                }
                out.push_back(e.get<std::int32_t>());
            }
        }
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void issue(const std::string& path, const std::string& what) {
        issues_.push_back(fmt::format("{}: {}", path.empty() ? "<root>" : path, what));
    }

private:
    const json& node_;
    std::string path_;
    std::vector<std::string>& issues_;
    std::set<std::string> seen_;
    bool ok_ = true;
};

void read_label_prior(Reader& r, LabelPrior& p) {
    r.number("mu_mean", p.mu_mean);
    r.number("mu_std", p.mu_std);
    r.number("sigma_scale", p.sigma_scale);
}

void read_corruption(const json& node, const std::string& path, CorruptionParams& p,
                     std::vector<std::string>& issues) {
    Reader r(node, path, issues);
    r.number("bias_amplitude", p.bias_amplitude);
    r.number("bias_control_spacing_mm", p.bias_control_spacing);
    r.number("noise_sigma", p.noise_sigma);
    r.vec3("slice_spacing_mm", p.slice_spacing);
    r.number("gamma_log_std", p.gamma_log_std);
}

void read_config(const json& doc, GenerationConfig& c, std::vector<std::string>& issues) {
    Reader root(doc, "", issues);
    if (const json* v = root.get("master_seed")) {
        if (v->is_number_unsigned()) {
            c.master_seed = v->get<std::uint64_t>();
        } else if (v->is_number_integer()) {
            root.issue("master_seed", "must be >= 0");
        } else {
            root.issue("master_seed", "expected an integer");
        }
    }
    std::int64_t n = c.batch_size;
    root.integer("batch_size", n);
    if (n < 1 || n > 4096) {
        root.issue("batch_size", fmt::format("{} is outside [1, 4096]", n));
    } else {
        c.batch_size = static_cast<int>(n);
    }
    if (const json* v = root.get("patch_size")) {
        if (v->is_null()) {
            c.patch_size.reset();
        } else if (v->is_array() && v->size() == 3 && (*v)[0].is_number_integer() && (*v)[1].is_number_integer() &&
                   (*v)[2].is_number_integer()) {
            c.patch_size = Index3{(*v)[0].get<std::int64_t>(), (*v)[1].get<std::int64_t>(),
                                  (*v)[2].get<std::int64_t>()};
        } else {
            root.issue("patch_size", "expected null or an array of 3 integers");
        }
    }

    if (const json* d = root.get("deformation")) {
        Reader rd(*d, "deformation", issues);
        if (const json* a = rd.get("affine")) {
            Reader ra(*a, "deformation.affine", issues);
            ra.range("rotation_deg", c.deformation.affine.rotation_deg);
            ra.range("scaling", c.deformation.affine.scaling);
            ra.range("shearing", c.deformation.affine.shearing);
            ra.range("translation_mm", c.deformation.affine.translation_mm);
        }
        if (const json* s = rd.get("svf")) {
            Reader rs(*s, "deformation.svf", issues);
            rs.number("control_spacing_mm", c.deformation.svf_control_spacing);
            rs.range("amplitude_mm", c.deformation.svf_amplitude);
            std::int64_t steps = c.deformation.integration_steps;
            rs.integer("integration_steps", steps);
            if (steps < 1 || steps > 30) {
                rs.issue("deformation.svf.integration_steps", fmt::format("{} is outside [1, 30]", steps));
            } else {
                c.deformation.integration_steps = static_cast<int>(steps);
            }
        }
    }

    if (const json* p = root.get("contrast")) {
        Reader rc(*p, "contrast", issues);
        rc.number("mu_mean", c.contrast.mu_mean);
        rc.number("mu_std", c.contrast.mu_std);
        rc.number("sigma_scale", c.contrast.sigma_scale);
        if (const json* o = rc.get("per_label_overrides")) {
            if (!o->is_object()) {
                rc.issue("contrast.per_label_overrides", "expected an object keyed by label");
            } else {
                c.contrast.per_label_overrides.clear();
                for (const auto& item : o->items()) {
                    const std::string path = "contrast.per_label_overrides." + item.key();
                    std::int32_t label = 0;
                    try {
                        std::size_t used = 0;
                        const long v = std::stol(item.key(), &used);
                        if (used != item.key().size() || v < 0 || v > INT32_MAX) {
                            throw std::invalid_argument("label");
                        }
                        label = static_cast<std::int32_t>(v);
                    } catch (const std::exception&) {
                        issues.push_back(path + ": key must be a non-negative integer label");
                        continue;
                    }
                    LabelPrior lp = c.contrast.for_label(label);
                    Reader rl(item.value(), path, issues);
                    read_label_prior(rl, lp);
                    c.contrast.per_label_overrides[label] = lp;
                }
            }
        }
    }

    if (const json* cr = root.get("corruption")) {
        Reader rc(*cr, "corruption", issues);
        if (const json* m = rc.get("mild")) {
            read_corruption(*m, "corruption.mild", c.mild, issues);
        }
        if (const json* s = rc.get("severe")) {
            read_corruption(*s, "corruption.severe", c.severe, issues);
        }
        rc.boolean("randomize_slice_axis", c.randomize_slice_axis);
    }

    if (const json* m = root.get("mixup")) {
        Reader rm(*m, "mixup", issues);
        rm.boolean("enabled", c.mixup_enabled);
        rm.range("lambda", c.mixup.lambda);
    }

    if (const json* t = root.get("targets")) {
        Reader rt(*t, "targets", issues);
        rt.labels("segmentation_labels", c.targets.segmentation_labels);
        if (const json* d = rt.get("distance_targets")) {
            if (!d->is_array()) {
                rt.issue("targets.distance_targets", "expected an array");
            } else {
                c.targets.distance_targets.clear();
                for (std::size_t i = 0; i < d->size(); ++i) {
                    const std::string path = fmt::format("targets.distance_targets[{}]", i);
                    DistanceTarget dt;
                    Reader rd((*d)[i], path, issues);
                    if (const json* name = rd.get("name")) {
                        if (name->is_string() && !name->get<std::string>().empty()) {
                            dt.name = name->get<std::string>();
                        } else {
                            rd.issue(path + ".name", "expected a non-empty string");
                        }
                    } else {
                        rd.issue(path + ".name", "required");
                    }
                    rd.labels("labels", dt.labels);
                    rd.boolean("signed", dt.signed_distance);
                    c.targets.distance_targets.push_back(dt);
                }
            }
        }
        if (const json* b = rt.get("atlas_box")) {
            if (b->is_null()) {
                c.targets.atlas_box.reset();
            } else {
                AtlasBox box;
                Reader rb(*b, "targets.atlas_box", issues);
                rb.vec3("lo", box.lo);
                rb.vec3("hi", box.hi);
                c.targets.atlas_box = box;
            }
        }
    }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }
json vec_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

} // namespace

void GenerationConfig::validate() const {
    std::vector<std::string> issues;
    const auto guard = [&](const std::string& prefix, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError& e) {
            issues.push_back(prefix + e.what());
        }
    };
    guard("", [&] { deformation.validate(); });
    guard("", [&] { contrast.validate(); });
    guard("corruption.mild.", [&] { mild.validate(); });
    guard("corruption.severe.", [&] { severe.validate(); });
    guard("", [&] { mixup.validate(); });

    const auto order = [&](const char* field, double lo, double hi) {
        if (lo > hi) {
            issues.push_back(fmt::format("corruption.mild.{}: mild value {} exceeds severe value {}", field, lo, hi));
        }
    };
    order("noise_sigma", mild.noise_sigma, severe.noise_sigma);
    order("bias_amplitude", mild.bias_amplitude, severe.bias_amplitude);
    order("gamma_log_std", mild.gamma_log_std, severe.gamma_log_std);
    for (int a = 0; a < 3; ++a) {
        order(fmt::format("slice_spacing_mm[{}]", a).c_str(), mild.slice_spacing[a], severe.slice_spacing[a]);
    }
    if (batch_size < 1) {
        issues.push_back("batch_size: must be >= 1");
    }
    if (patch_size) {
        for (int a = 0; a < 3; ++a) {
            if ((*patch_size)[static_cast<std::size_t>(a)] < 1) {
                issues.push_back(fmt::format("patch_size[{}]: must be >= 1", a));
            }
        }
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < targets.distance_targets.size(); ++i) {
        const auto& d = targets.distance_targets[i];
        if (d.name.empty()) {
            continue; // reported by the parser
        }
        if (!names.insert(d.name).second) {
            issues.push_back(fmt::format("targets.distance_targets[{}].name: duplicate name '{}'", i, d.name));
        }
        for (char ch : d.name) {
            if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
                issues.push_back(fmt::format("targets.distance_targets[{}].name: only [A-Za-z0-9_-] allowed", i));
                break;
            }
        }
    }
    if (targets.atlas_box) {
        for (int a = 0; a < 3; ++a) {
            if (!(targets.atlas_box->hi[a] > targets.atlas_box->lo[a]) || !std::isfinite(targets.atlas_box->lo[a]) ||
                !std::isfinite(targets.atlas_box->hi[a])) {
                issues.push_back(fmt::format("targets.atlas_box: axis {} needs finite lo < hi", a));
            }
        }
    }
    if (!issues.empty()) {
        std::string msg = "invalid generation config:";
        for (const auto& s : issues) {
            msg += "\n  " + s;
        }
        throw ConfigError(msg);
    }
}

GenerationConfig default_config() {
    GenerationConfig c;
    c.mild.noise_sigma = 1.0;
    c.mild.bias_amplitude = 0.1;
    c.mild.slice_spacing = Vec3(1.0, 1.0, 1.0);
    c.severe.noise_sigma = 10.0;
    c.severe.bias_amplitude = 0.5;
    c.severe.slice_spacing = Vec3(1.0, 1.0, 5.0);
    // Background stays black so the painted head sits on an empty field.
    c.contrast.per_label_overrides[0] = LabelPrior{0.0, 0.0, 0.0};
    c.targets.segmentation_labels = default_segmentation_labels();
    c.targets.distance_targets = default_distance_targets();
    return c;
}

GenerationConfig config_from_json(const json& doc) {
    GenerationConfig c = default_config();
    std::vector<std::string> issues;
    read_config(doc, c, issues);
    if (!issues.empty()) {
        std::string msg = "invalid generation config:";
        for (const auto& s : issues) {
            msg += "\n  " + s;
        }
        throw ConfigError(msg);
    }
    c.validate();
    return c;
}

GenerationConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("{}: cannot open config file", path));
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("{}: not valid JSON ({})", path, e.what()));
    }
    try {
        return config_from_json(doc);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path, e.what()));
    }
}

json corruption_to_json(const CorruptionParams& p) {
    return json{{"bias_amplitude", p.bias_amplitude},
                {"bias_control_spacing_mm", p.bias_control_spacing},
                {"noise_sigma", p.noise_sigma},
                {"slice_spacing_mm", vec_json(p.slice_spacing)},
                {"gamma_log_std", p.gamma_log_std}};
}

json config_to_json(const GenerationConfig& c) {
    json overrides = json::object();
    for (const auto& [label, p] : c.contrast.per_label_overrides) {
        overrides[std::to_string(label)] = json{{"mu_mean", p.mu_mean}, {"mu_std", p.mu_std}, {"sigma_scale", p.sigma_scale}};
    }
    json dists = json::array();
    for (const auto& d : c.targets.distance_targets) {
        dists.push_back(json{{"name", d.name}, {"labels", d.labels}, {"signed", d.signed_distance}});
    }
    json doc{
        {"master_seed", c.master_seed},
        {"batch_size", c.batch_size},
        {"patch_size", c.patch_size ? json::array({(*c.patch_size)[0], (*c.patch_size)[1], (*c.patch_size)[2]})
                                    : json(nullptr)},
        {"deformation",
         {{"affine",
           {{"rotation_deg", range_json(c.deformation.affine.rotation_deg)},
            {"scaling", range_json(c.deformation.affine.scaling)},
            {"shearing", range_json(c.deformation.affine.shearing)},
            {"translation_mm", range_json(c.deformation.affine.translation_mm)}}},
          {"svf",
           {{"control_spacing_mm", c.deformation.svf_control_spacing},
            {"amplitude_mm", range_json(c.deformation.svf_amplitude)},
            {"integration_steps", c.deformation.integration_steps}}}}},
        {"contrast",
         {{"mu_mean", c.contrast.mu_mean},
          {"mu_std", c.contrast.mu_std},
          {"sigma_scale", c.contrast.sigma_scale},
          {"per_label_overrides", overrides}}},
        {"corruption",
         {{"mild", corruption_to_json(c.mild)},
          {"severe", corruption_to_json(c.severe)},
          {"randomize_slice_axis", c.randomize_slice_axis}}},
        {"mixup", {{"enabled", c.mixup_enabled}, {"lambda", range_json(c.mixup.lambda)}}},
        {"targets",
         {{"segmentation_labels", c.targets.segmentation_labels},
          {"distance_targets", dists},
          {"atlas_box", c.targets.atlas_box
                            ? json{{"lo", vec_json(c.targets.atlas_box->lo)}, {"hi", vec_json(c.targets.atlas_box->hi)}}
                            : json(nullptr)}}},
    };
    return doc;
}

std::string config_hash(const GenerationConfig& config) {
    return fmt::format("{:016x}", fnv1a64(config_to_json(config).dump()));
}

} // namespace synthvol
