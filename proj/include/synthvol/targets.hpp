#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synthvol/deform.hpp"
#include "synthvol/volume.hpp"

namespace synthvol {

// Modalities a subject may carry, in canonical order.
inline const std::vector<std::string> kModalities = {"t1w", "t2w", "flair", "ct"};

struct Subject {
    std::string id;
    LabelVolume labels;
    std::map<std::string, Volume> reals; // co-registered, min-max normalised
    std::optional<Mat4> atlas_transform; // subject world -> atlas world

    // Throws ShapeError when a real image does not share labels.grid().
    void validate() const;
};

// Exact Euclidean distance (mm) to the nearest boundary voxel of the
// foreground. A boundary voxel is a foreground voxel with at least one
// face neighbour that is background or lies outside the grid, so a fully
// foreground volume measures depth from the volume faces. Computed with
// three separable lower-envelope passes (x, then y, then z). In signed
// mode non-boundary foreground distances are negated.
// Throws DomainError when no voxel carries a foreground label.
Volume distance_map(const LabelVolume& labels, const std::vector<std::int32_t>& foreground, bool signed_distance = false);

// Every non-zero label of `labels` as foreground.
Volume distance_map(const LabelVolume& labels, bool signed_distance = false);

struct AtlasBox {
    Vec3 lo = Vec3::Constant(-1.0);
    Vec3 hi = Vec3::Constant(1.0);
};

// World bounding box of `grid` after mapping through `atlas_transform`.
AtlasBox atlas_box_for(const VoxelGrid& grid, const Mat4& atlas_transform);

// C(x) = 2 (T coords(x) - box.lo) / (box.hi - box.lo) - 1 per axis.
Volume atlas_coordinate_target(const DeformationField& phi, const Mat4& atlas_transform, const AtlasBox& box);

struct DistanceTarget {
    std::string name;
    std::vector<std::int32_t> labels; // empty: every non-zero segmentation label
    bool signed_distance = false;
};

struct TargetOptions {
    // Labels kept in the segmentation target; others become background.
    // Empty keeps every label.
    std::vector<std::int32_t> segmentation_labels;
    std::vector<DistanceTarget> distance_targets;
    std::optional<AtlasBox> atlas_box;
};

// FreeSurfer-numbered defaults (left / right pairs plus midline).
std::vector<std::int32_t> default_segmentation_labels();
std::vector<DistanceTarget> default_distance_targets();

struct TargetSet {
    LabelVolume seg;
    std::map<std::string, Volume> modality_targets;
    std::map<std::string, Volume> dist;
    Volume atlas_coords;
    Volume bias_gt;
    // Names (modality or distance target) with no data for this sample.
    std::vector<std::string> absent;
};

// Remap labels outside `keep` to 0. Empty `keep` is the identity.
LabelVolume restrict_labels(const LabelVolume& labels, const std::vector<std::int32_t>& keep);

// Everything except bias_gt; shared by all samples warped with the same phi.
TargetSet assemble_shared_targets(const Subject& subject, const DeformationField& phi, const TargetOptions& options);

TargetSet assemble_targets(const Subject& subject, const DeformationField& phi, const Volume& bias_field,
                           const TargetOptions& options);

} // namespace synthvol
