#include "synthvol/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <limits>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <zlib.h>

#include "synthvol/errors.hpp"

static_assert(std::endian::native == std::endian::little, "NIfTI writer assumes a little-endian host");

namespace synthvol {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kDefaultVoxOffset = 352;
constexpr std::int16_t kIntentVector = 1007;

template <typename T>
T load(const std::uint8_t* p, bool swap) {
    std::array<std::uint8_t, sizeof(T)> b;
    std::memcpy(b.data(), p, sizeof(T));
    if (swap) {
        std::reverse(b.begin(), b.end());
    }
    T v;
    std::memcpy(&v, b.data(), sizeof(T));
    return v;
}

template <typename T>
void store(std::uint8_t* p, T v) {
    std::memcpy(p, &v, sizeof(T));
}

std::string load_string(const std::uint8_t* p, std::size_t n) {
    std::size_t len = 0;
    while (len < n && p[len] != 0) {
        ++len;
    }
    return std::string(reinterpret_cast<const char*>(p), len);
}

void store_string(std::uint8_t* p, std::size_t n, const std::string& s) {
    std::memcpy(p, s.data(), std::min(n - 1, s.size()));
}

bool is_supported(std::int16_t code) {
    switch (code) {
    case 2:
    case 4:
    case 8:
    case 16:
    case 64:
        return true;
    default:
        return false;
    }
}

std::string datatype_name(std::int16_t code) {
    switch (code) {
    case 1: return "binary";
    case 2: return "uint8";
    case 4: return "int16";
    case 8: return "int32";
    case 16: return "float32";
    case 32: return "complex64";
    case 64: return "float64";
    case 128: return "rgb24";
    case 256: return "int8";
    case 512: return "uint16";
    case 768: return "uint32";
    case 1024: return "int64";
    case 1280: return "uint64";
    default: return "unknown";
    }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    errno = 0;
    gzFile f = gzopen(path.c_str(), "rb");
    if (!f) {
        throw IoError(fmt::format("{}: cannot open ({})", path.string(),
                                  errno ? std::strerror(errno) : "out of memory"));
    }
    std::vector<std::uint8_t> bytes;
    std::array<std::uint8_t, 1 << 16> chunk;
    for (;;) {
        const int n = gzread(f, chunk.data(), static_cast<unsigned>(chunk.size()));
        if (n < 0) {
            int errnum = 0;
            const char* msg = gzerror(f, &errnum);
            std::string what = errnum == Z_ERRNO ? std::strerror(errno) : msg;
            gzclose(f);
            throw FormatError(fmt::format("{}: read failed ({})", path.string(), what));
        }
        if (n == 0) {
            break;
        }
        bytes.insert(bytes.end(), chunk.begin(), chunk.begin() + n);
    }
    gzclose(f);
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    const bool gz = path.extension() == ".gz";
    errno = 0;
    gzFile f = gzopen(path.c_str(), gz ? "wb6" : "wbT");
    if (!f) {
        throw IoError(fmt::format("{}: cannot open for writing ({})", path.string(),
                                  errno ? std::strerror(errno) : "out of memory"));
    }
    std::size_t written = 0;
    while (written < bytes.size()) {
        const auto n = static_cast<unsigned>(std::min<std::size_t>(bytes.size() - written, 1u << 30));
        if (gzwrite(f, bytes.data() + written, n) != static_cast<int>(n)) {
            int errnum = 0;
            const char* msg = gzerror(f, &errnum);
            std::string what = errnum == Z_ERRNO ? std::strerror(errno) : msg;
            gzclose(f);
            throw IoError(fmt::format("{}: write failed ({})", path.string(), what));
        }
        written += n;
    }
    if (gzclose(f) != Z_OK) {
        throw IoError(fmt::format("{}: close failed ({})", path.string(), std::strerror(errno)));
    }
}

Mat3 nearest_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

// Quaternion (b, c, d) and qfac for an orthonormal orientation matrix.
void orientation_to_quaternion(Mat3 r, double& b, double& c, double& d, double& qfac) {
    qfac = 1.0;
    if (r.determinant() < 0.0) {
        qfac = -1.0;
        r.col(2) = -r.col(2);
    }
    const double r11 = r(0, 0), r12 = r(0, 1), r13 = r(0, 2);
    const double r21 = r(1, 0), r22 = r(1, 1), r23 = r(1, 2);
    const double r31 = r(2, 0), r32 = r(2, 1), r33 = r(2, 2);
    double a = r11 + r22 + r33 + 1.0;
    if (a > 0.5) {
        a = 0.5 * std::sqrt(a);
        b = 0.25 * (r32 - r23) / a;
        c = 0.25 * (r13 - r31) / a;
        d = 0.25 * (r21 - r12) / a;
    } else {
        const double xd = 1.0 + r11 - (r22 + r33);
        const double yd = 1.0 + r22 - (r11 + r33);
        const double zd = 1.0 + r33 - (r11 + r22);
        if (xd > 1.0) {
            b = 0.5 * std::sqrt(xd);
            c = 0.25 * (r12 + r21) / b;
            d = 0.25 * (r13 + r31) / b;
            a = 0.25 * (r32 - r23) / b;
        } else if (yd > 1.0) {
            c = 0.5 * std::sqrt(yd);
            b = 0.25 * (r12 + r21) / c;
            d = 0.25 * (r23 + r32) / c;
            a = 0.25 * (r13 - r31) / c;
        } else {
            d = 0.5 * std::sqrt(zd);
            b = 0.25 * (r13 + r31) / d;
            c = 0.25 * (r23 + r32) / d;
            a = 0.25 * (r21 - r12) / d;
        }
        if (a < 0.0) {
            b = -b;
            c = -c;
            d = -d;
        }
    }
}

Mat3 quaternion_to_orientation(double b, double c, double d, double qfac) {
    double a = 1.0 - (b * b + c * c + d * d);
    if (a < 1e-7) {
        a = 1.0 / std::sqrt(b * b + c * c + d * d);
        b *= a;
        c *= a;
        d *= a;
        a = 0.0;
    } else {
        a = std::sqrt(a);
    }
    Mat3 r;
    r << a * a + b * b - c * c - d * d, 2.0 * (b * c - a * d), 2.0 * (b * d + a * c),
        2.0 * (b * c + a * d), a * a + c * c - b * b - d * d, 2.0 * (c * d - a * b),
        2.0 * (b * d - a * c), 2.0 * (c * d + a * b), a * a + d * d - c * c - b * b;
    if (qfac < 0.0) {
        r.col(2) = -r.col(2);
    }
    return nearest_rotation(r);
}

double positive_or_one(float v) {
    return (std::isfinite(v) && v > 0.0f) ? double(v) : 1.0;
}

} // namespace

std::string to_string(NiftiDatatype dt) {
    return datatype_name(static_cast<std::int16_t>(dt));
}

int bytes_per_voxel(NiftiDatatype dt) {
    switch (dt) {
    case NiftiDatatype::uint8: return 1;
    case NiftiDatatype::int16: return 2;
    case NiftiDatatype::int32: return 4;
    case NiftiDatatype::float32: return 4;
    case NiftiDatatype::float64: return 8;
    }
    return 0;
}

std::string to_string(GridSource s) {
    switch (s) {
    case GridSource::sform: return "sform";
    case GridSource::qform: return "qform";
    case GridSource::pixdim: return "pixdim";
    }
    return "unknown";
}

NiftiHeader NiftiHeader::parse(const std::uint8_t* p, std::size_t size, bool* swapped) {
    if (size < kHeaderSize) {
        throw FormatError(fmt::format("header: file holds {} bytes, a NIfTI-1 header needs 348", size));
    }
    bool swap = false;
    std::int32_t sizeof_hdr = load<std::int32_t>(p, false);
    if (sizeof_hdr != 348) {
        sizeof_hdr = load<std::int32_t>(p, true);
        if (sizeof_hdr != 348) {
            throw FormatError(fmt::format("header: sizeof_hdr = {} (expected 348)", load<std::int32_t>(p, false)));
        }
        swap = true;
    }
    if (swapped) {
        *swapped = swap;
    }
    NiftiHeader h;
    h.sizeof_hdr = sizeof_hdr;
    std::memcpy(h.magic.data(), p + 344, 4);
    if (!(h.magic[0] == 'n' && h.magic[1] == '+' && h.magic[2] == '1' && h.magic[3] == '\0')) {
        throw FormatError(fmt::format("header: magic = \"{}\" (expected \"n+1\" single-file NIfTI-1)",
                                      load_string(p + 344, 4)));
    }
    h.dim_info = static_cast<char>(p[39]);
    for (int i = 0; i < 8; ++i) {
        h.dim[static_cast<std::size_t>(i)] = load<std::int16_t>(p + 40 + 2 * i, swap);
    }
    h.intent_p1 = load<float>(p + 56, swap);
    h.intent_p2 = load<float>(p + 60, swap);
    h.intent_p3 = load<float>(p + 64, swap);
    h.intent_code = load<std::int16_t>(p + 68, swap);
    h.datatype = load<std::int16_t>(p + 70, swap);
    h.bitpix = load<std::int16_t>(p + 72, swap);
    h.slice_start = load<std::int16_t>(p + 74, swap);
    for (int i = 0; i < 8; ++i) {
        h.pixdim[static_cast<std::size_t>(i)] = load<float>(p + 76 + 4 * i, swap);
    }
    h.vox_offset = load<float>(p + 108, swap);
    h.scl_slope = load<float>(p + 112, swap);
    h.scl_inter = load<float>(p + 116, swap);
    h.slice_end = load<std::int16_t>(p + 120, swap);
    h.slice_code = static_cast<char>(p[122]);
    h.xyzt_units = static_cast<char>(p[123]);
    h.cal_max = load<float>(p + 124, swap);
    h.cal_min = load<float>(p + 128, swap);
    h.slice_duration = load<float>(p + 132, swap);
    h.toffset = load<float>(p + 136, swap);
    h.descrip = load_string(p + 148, 80);
    h.aux_file = load_string(p + 228, 24);
    h.qform_code = load<std::int16_t>(p + 252, swap);
    h.sform_code = load<std::int16_t>(p + 254, swap);
    h.quatern_b = load<float>(p + 256, swap);
    h.quatern_c = load<float>(p + 260, swap);
    h.quatern_d = load<float>(p + 264, swap);
    h.qoffset_x = load<float>(p + 268, swap);
    h.qoffset_y = load<float>(p + 272, swap);
    h.qoffset_z = load<float>(p + 276, swap);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            h.srow[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = load<float>(p + 280 + 16 * r + 4 * c, swap);
        }
    }
    h.intent_name = load_string(p + 328, 16);

    if (h.dim[0] < 1 || h.dim[0] > 7) {
        throw FormatError(fmt::format("header: dim[0] = {} (expected 1..7)", h.dim[0]));
    }
    for (int i = 1; i <= h.dim[0]; ++i) {
        if (h.dim[static_cast<std::size_t>(i)] < 1) {
            throw FormatError(fmt::format("header: dim[{}] = {} (expected >= 1)", i, h.dim[static_cast<std::size_t>(i)]));
        }
    }
    if (!is_supported(h.datatype)) {
        throw UnsupportedTypeError(
            fmt::format("header: datatype {} ({}) is not supported", h.datatype, datatype_name(h.datatype)));
    }
    const int expected_bits = 8 * bytes_per_voxel(static_cast<NiftiDatatype>(h.datatype));
    if (h.bitpix != expected_bits) {
        throw FormatError(fmt::format("header: bitpix = {} inconsistent with datatype {} ({} bits)", h.bitpix,
                                      datatype_name(h.datatype), expected_bits));
    }
    if (!std::isfinite(h.vox_offset) || h.vox_offset < float(kHeaderSize)) {
        throw FormatError(fmt::format("header: vox_offset = {} (expected >= 348)", h.vox_offset));
    }
    return h;
}

std::vector<std::uint8_t> NiftiHeader::serialize() const {
    std::vector<std::uint8_t> b(kHeaderSize, 0);
    std::uint8_t* p = b.data();
    store<std::int32_t>(p, 348);
    p[38] = 'r';
    p[39] = static_cast<std::uint8_t>(dim_info);
    for (int i = 0; i < 8; ++i) {
        store<std::int16_t>(p + 40 + 2 * i, dim[static_cast<std::size_t>(i)]);
    }
    store<float>(p + 56, intent_p1);
    store<float>(p + 60, intent_p2);
    store<float>(p + 64, intent_p3);
    store<std::int16_t>(p + 68, intent_code);
    store<std::int16_t>(p + 70, datatype);
    store<std::int16_t>(p + 72, bitpix);
    store<std::int16_t>(p + 74, slice_start);
    for (int i = 0; i < 8; ++i) {
        store<float>(p + 76 + 4 * i, pixdim[static_cast<std::size_t>(i)]);
    }
    store<float>(p + 108, vox_offset);
    store<float>(p + 112, scl_slope);
    store<float>(p + 116, scl_inter);
    store<std::int16_t>(p + 120, slice_end);
    p[122] = static_cast<std::uint8_t>(slice_code);
    p[123] = static_cast<std::uint8_t>(xyzt_units);
    store<float>(p + 124, cal_max);
    store<float>(p + 128, cal_min);
    store<float>(p + 132, slice_duration);
    store<float>(p + 136, toffset);
    store_string(p + 148, 80, descrip);
    store_string(p + 228, 24, aux_file);
    store<std::int16_t>(p + 252, qform_code);
    store<std::int16_t>(p + 254, sform_code);
    store<float>(p + 256, quatern_b);
    store<float>(p + 260, quatern_c);
    store<float>(p + 264, quatern_d);
    store<float>(p + 268, qoffset_x);
    store<float>(p + 272, qoffset_y);
    store<float>(p + 276, qoffset_z);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            store<float>(p + 280 + 16 * r + 4 * c, srow[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
        }
    }
    store_string(p + 328, 16, intent_name);
    std::memcpy(p + 344, magic.data(), 4);
    return b;
}

VoxelGrid grid_from_header(const NiftiHeader& h, GridSource* source) {
    VoxelGrid g;
    for (int a = 0; a < 3; ++a) {
        g.dims[static_cast<std::size_t>(a)] = a < h.dim[0] ? h.dim[static_cast<std::size_t>(a + 1)] : 1;
    }
    if (h.sform_code > 0) {
        Mat3 m;
        Vec3 t;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                m(r, c) = h.srow[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
            }
            t[r] = h.srow[static_cast<std::size_t>(r)][3];
        }
        const Vec3 norms = m.colwise().norm().transpose();
        if (m.allFinite() && t.allFinite() && norms.minCoeff() > 0.0) {
            const Mat3 dir = m * norms.cwiseInverse().asDiagonal();
            const double skew = (dir.transpose() * dir - Mat3::Identity()).cwiseAbs().maxCoeff();
            if (skew <= 1e-4) {
                g.spacing = norms;
                g.orientation = nearest_rotation(dir);
                g.origin = t;
                if (source) {
                    *source = GridSource::sform;
                }
                return g;
            }
        }
    }
    if (h.qform_code > 0) {
        const double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
        g.spacing = Vec3(positive_or_one(h.pixdim[1]), positive_or_one(h.pixdim[2]), positive_or_one(h.pixdim[3]));
        g.orientation = quaternion_to_orientation(h.quatern_b, h.quatern_c, h.quatern_d, qfac);
        g.origin = Vec3(h.qoffset_x, h.qoffset_y, h.qoffset_z);
        if (source) {
            *source = GridSource::qform;
        }
        return g;
    }
    g.spacing = Vec3(positive_or_one(h.pixdim[1]), positive_or_one(h.pixdim[2]), positive_or_one(h.pixdim[3]));
    if (source) {
        *source = GridSource::pixdim;
    }
    return g;
}

NiftiImage read_nifti_image(const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    NiftiImage img;
    bool swap = false;
    try {
        img.header = NiftiHeader::parse(bytes.data(), bytes.size(), &swap);
    } catch (const UnsupportedTypeError& e) {
        throw UnsupportedTypeError(fmt::format("{}: {}", path.string(), e.what()));
    } catch (const FormatError& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
    img.grid = grid_from_header(img.header, &img.grid_source);
    try {
        img.grid.validate();
    } catch (const ConfigError& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
    img.channels = 1;
    for (int i = 4; i <= img.header.dim[0]; ++i) {
        img.channels *= img.header.dim[static_cast<std::size_t>(i)];
    }
    const auto bpv = static_cast<std::size_t>(bytes_per_voxel(img.datatype()));
    const std::size_t need = img.grid.voxel_count() * static_cast<std::size_t>(img.channels) * bpv;
    const auto offset = static_cast<std::size_t>(img.header.vox_offset);
    if (bytes.size() < offset || bytes.size() - offset < need) {
        throw FormatError(fmt::format("{}: truncated payload: expected {} bytes after offset {}, found {}",
                                      path.string(), need, offset, bytes.size() > offset ? bytes.size() - offset : 0));
    }
    img.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                       bytes.begin() + static_cast<std::ptrdiff_t>(offset + need));
    if (swap && bpv > 1) {
        for (std::size_t i = 0; i < img.payload.size(); i += bpv) {
            std::reverse(img.payload.begin() + static_cast<std::ptrdiff_t>(i),
                         img.payload.begin() + static_cast<std::ptrdiff_t>(i + bpv));
        }
    }
    return img;
}

namespace {

template <typename T>
void decode(const std::vector<std::uint8_t>& payload, std::vector<double>& out) {
    const std::size_t n = payload.size() / sizeof(T);
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        T v;
        std::memcpy(&v, payload.data() + i * sizeof(T), sizeof(T));
        out[i] = static_cast<double>(v);
    }
}

std::vector<double> decode_payload(const NiftiImage& img) {
    std::vector<double> out;
    switch (img.datatype()) {
    case NiftiDatatype::uint8: decode<std::uint8_t>(img.payload, out); break;
    case NiftiDatatype::int16: decode<std::int16_t>(img.payload, out); break;
    case NiftiDatatype::int32: decode<std::int32_t>(img.payload, out); break;
    case NiftiDatatype::float32: decode<float>(img.payload, out); break;
    case NiftiDatatype::float64: decode<double>(img.payload, out); break;
    }
    return out;
}

template <typename T>
void encode_integral(std::span<const double> values, std::vector<std::uint8_t>& out, NiftiDatatype dt) {
    out.resize(values.size() * sizeof(T));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (v != std::floor(v) || v < double(std::numeric_limits<T>::lowest()) ||
            v > double(std::numeric_limits<T>::max())) {
            throw FormatError(fmt::format("write: value {} not representable as {}", v, to_string(dt)));
        }
        const T t = static_cast<T>(v);
        std::memcpy(out.data() + i * sizeof(T), &t, sizeof(T));
    }
}

NiftiHeader make_header(const VoxelGrid& g, int channels, NiftiDatatype dt, const std::string& description) {
    NiftiHeader h;
    h.dim = {3, static_cast<std::int16_t>(g.dims[0]), static_cast<std::int16_t>(g.dims[1]),
             static_cast<std::int16_t>(g.dims[2]), 1, 1, 1, 1};
    for (int a = 0; a < 3; ++a) {
        if (g.dims[static_cast<std::size_t>(a)] > std::numeric_limits<std::int16_t>::max()) {
            throw FormatError("write: NIfTI-1 dims are limited to 32767 voxels per axis");
        }
    }
    if (channels > 1) {
        h.dim[0] = 5;
        h.dim[5] = static_cast<std::int16_t>(channels);
        h.intent_code = kIntentVector;
    }
    h.datatype = static_cast<std::int16_t>(dt);
    h.bitpix = static_cast<std::int16_t>(8 * bytes_per_voxel(dt));
    double b, c, d, qfac;
    orientation_to_quaternion(g.orientation, b, c, d, qfac);
    h.pixdim = {static_cast<float>(qfac), static_cast<float>(g.spacing[0]), static_cast<float>(g.spacing[1]),
                static_cast<float>(g.spacing[2]), 1.0f, 1.0f, 1.0f, 1.0f};
    h.vox_offset = float(kDefaultVoxOffset);
    h.scl_slope = 0.0f;
    h.scl_inter = 0.0f;
    h.xyzt_units = 2; // mm
    h.descrip = description;
    h.qform_code = 1;
    h.sform_code = 1;
    h.quatern_b = static_cast<float>(b);
    h.quatern_c = static_cast<float>(c);
    h.quatern_d = static_cast<float>(d);
    h.qoffset_x = static_cast<float>(g.origin[0]);
    h.qoffset_y = static_cast<float>(g.origin[1]);
    h.qoffset_z = static_cast<float>(g.origin[2]);
    const Mat4 m = g.index_to_world();
    for (int r = 0; r < 3; ++r) {
        for (int col = 0; col < 4; ++col) {
            h.srow[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] = static_cast<float>(m(r, col));
        }
    }
    return h;
}

} // namespace

Volume read_nifti(const std::filesystem::path& path, GridSource* source) {
    const NiftiImage img = read_nifti_image(path);
    if (source) {
        *source = img.grid_source;
    }
    std::vector<float> data;
    const bool scale = img.header.scl_slope != 0.0f && std::isfinite(img.header.scl_slope);
    const double slope = scale ? img.header.scl_slope : 1.0;
    const double inter = scale && std::isfinite(img.header.scl_inter) ? img.header.scl_inter : 0.0;
    if (img.datatype() == NiftiDatatype::float32 && !scale) {
        data.resize(img.payload.size() / 4);
        std::memcpy(data.data(), img.payload.data(), img.payload.size());
    } else {
        const std::vector<double> raw = decode_payload(img);
        data.resize(raw.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
            data[i] = static_cast<float>(raw[i] * slope + inter);
        }
    }
    try {
        return Volume(img.grid, img.channels, std::move(data));
    } catch (const DomainError& e) {
        throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

LabelVolume read_nifti_labels(const std::filesystem::path& path, GridSource* source) {
    const NiftiImage img = read_nifti_image(path);
    if (source) {
        *source = img.grid_source;
    }
    if (img.channels != 1) {
        throw FormatError(fmt::format("{}: label maps must have a single channel, found {}", path.string(),
                                      img.channels));
    }
    const std::vector<double> raw = decode_payload(img);
    std::vector<std::int32_t> labels(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double v = raw[i];
        if (!std::isfinite(v) || v != std::floor(v) || v < 0.0 || v > double(std::numeric_limits<std::int32_t>::max())) {
            throw FormatError(fmt::format("{}: voxel {} holds {} which is not a non-negative integer label",
                                          path.string(), i, v));
        }
        labels[i] = static_cast<std::int32_t>(v);
    }
    return LabelVolume(img.grid, std::move(labels));
}

void write_nifti_image(const std::filesystem::path& path, const NiftiImage& image) {
    std::vector<std::uint8_t> bytes = image.header.serialize();
    bytes.resize(static_cast<std::size_t>(image.header.vox_offset), 0);
    bytes.insert(bytes.end(), image.payload.begin(), image.payload.end());
    write_file_bytes(path, bytes);
}

void write_nifti(const std::filesystem::path& path, const Volume& vol, NiftiDatatype datatype,
                 const std::string& description) {
    NiftiImage img;
    img.grid = vol.grid();
    img.channels = vol.channels();
    img.header = make_header(vol.grid(), vol.channels(), datatype, description);
    const auto data = vol.data();
    switch (datatype) {
    case NiftiDatatype::float32:
        img.payload.resize(data.size() * 4);
        std::memcpy(img.payload.data(), data.data(), img.payload.size());
        break;
    case NiftiDatatype::float64: {
        img.payload.resize(data.size() * 8);
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double v = data[i];
            std::memcpy(img.payload.data() + 8 * i, &v, 8);
        }
        break;
    }
    default: {
        std::vector<double> values(data.begin(), data.end());
        if (datatype == NiftiDatatype::uint8) {
            encode_integral<std::uint8_t>(values, img.payload, datatype);
        } else if (datatype == NiftiDatatype::int16) {
            encode_integral<std::int16_t>(values, img.payload, datatype);
        } else {
            encode_integral<std::int32_t>(values, img.payload, datatype);
        }
    }
    }
    write_nifti_image(path, img);
}

void write_nifti(const std::filesystem::path& path, const LabelVolume& labels, NiftiDatatype datatype,
                 const std::string& description) {
    NiftiImage img;
    img.grid = labels.grid();
    img.header = make_header(labels.grid(), 1, datatype, description);
    const auto in = labels.labels();
    std::vector<double> values(in.begin(), in.end());
    switch (datatype) {
    case NiftiDatatype::uint8: encode_integral<std::uint8_t>(values, img.payload, datatype); break;
    case NiftiDatatype::int16: encode_integral<std::int16_t>(values, img.payload, datatype); break;
    case NiftiDatatype::int32: encode_integral<std::int32_t>(values, img.payload, datatype); break;
    case NiftiDatatype::float32: {
        img.payload.resize(values.size() * 4);
        for (std::size_t i = 0; i < values.size(); ++i) {
            const float v = static_cast<float>(values[i]);
            if (double(v) != values[i]) {
                throw FormatError(fmt::format("write: label {} not exactly representable as float32", values[i]));
            }
            std::memcpy(img.payload.data() + 4 * i, &v, 4);
        }
        break;
    }
    case NiftiDatatype::float64: {
        img.payload.resize(values.size() * 8);
        std::memcpy(img.payload.data(), values.data(), img.payload.size());
        break;
    }
    }
    write_nifti_image(path, img);
}

} // namespace synthvol
