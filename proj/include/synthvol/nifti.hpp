#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "synthvol/volume.hpp"

namespace synthvol {

enum class NiftiDatatype : std::int16_t {
    uint8 = 2,
    int16 = 4,
    int32 = 8,
    float32 = 16,
    float64 = 64,
};

std::string to_string(NiftiDatatype dt);
int bytes_per_voxel(NiftiDatatype dt);

// In-memory image of the 348-byte NIfTI-1 header (native byte order).
struct NiftiHeader {
    std::int32_t sizeof_hdr = 348;
    char dim_info = 0;
    std::array<std::int16_t, 8> dim{};
    float intent_p1 = 0, intent_p2 = 0, intent_p3 = 0;
    std::int16_t intent_code = 0;
    std::int16_t datatype = 0;
    std::int16_t bitpix = 0;
    std::int16_t slice_start = 0;
    std::array<float, 8> pixdim{};
    float vox_offset = 352.0f;
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
    std::int16_t slice_end = 0;
    char slice_code = 0;
    char xyzt_units = 0;
    float cal_max = 0, cal_min = 0, slice_duration = 0, toffset = 0;
    std::string descrip;
    std::string aux_file;
    std::int16_t qform_code = 0;
    std::int16_t sform_code = 0;
    float quatern_b = 0, quatern_c = 0, quatern_d = 0;
    float qoffset_x = 0, qoffset_y = 0, qoffset_z = 0;
    std::array<std::array<float, 4>, 3> srow{};
    std::string intent_name;
    std::array<char, 4> magic{'n', '+', '1', '\0'};

    // Throws FormatError naming the offending field.
    static NiftiHeader parse(const std::uint8_t* bytes, std::size_t size, bool* swapped = nullptr);
    // Little-endian 348 bytes.
    std::vector<std::uint8_t> serialize() const;
};

enum class GridSource { sform, qform, pixdim };
std::string to_string(GridSource s);

// Header, derived geometry and payload of a single-file NIfTI-1 image.
// The payload is converted to native byte order but otherwise untouched.
struct NiftiImage {
    NiftiHeader header;
    VoxelGrid grid;
    GridSource grid_source = GridSource::pixdim;
    int channels = 1;
    std::vector<std::uint8_t> payload;

    NiftiDatatype datatype() const { return static_cast<NiftiDatatype>(header.datatype); }
};

// Geometry rule: sform when its code is set and its columns are orthogonal,
// else qform when its code is set, else pixdim with identity orientation.
VoxelGrid grid_from_header(const NiftiHeader& h, GridSource* source = nullptr);

// Accepts `.nii` and `.nii.gz` (gzip detected from magic bytes) in either
// byte order.
NiftiImage read_nifti_image(const std::filesystem::path& path);

// Intensity volume; scl_slope/scl_inter applied when slope != 0.
Volume read_nifti(const std::filesystem::path& path, GridSource* source = nullptr);

// Label intent: integral values loaded as-is, no intensity scaling.
LabelVolume read_nifti_labels(const std::filesystem::path& path, GridSource* source = nullptr);

// Emits a little-endian single-file NIfTI-1 with sform and qform both set
// from the grid. Gzip is applied when the path ends in ".gz". Integer
// datatypes require integral in-range values; no scaling is written.
void write_nifti(const std::filesystem::path& path, const Volume& vol,
                 NiftiDatatype datatype = NiftiDatatype::float32, const std::string& description = "");
void write_nifti(const std::filesystem::path& path, const LabelVolume& labels,
                 NiftiDatatype datatype = NiftiDatatype::int16, const std::string& description = "");

// Lower level writer used by both overloads above.
void write_nifti_image(const std::filesystem::path& path, const NiftiImage& image);

} // namespace synthvol
