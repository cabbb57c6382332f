#pragma once

// Minimal NIfTI-1 volume IO. Reads single-file (.nii, magic "n+1") volumes
// with uint8, int16, float32 or float64 payloads, applying scl_slope /
// scl_inter scaling; byte order is detected from the sizeof_hdr field.
// Writes little-endian float32 or uint8 with a 352-byte data offset.
//
// Header field offsets follow the published NIfTI-1 layout (348-byte
// header); only the fields this pipeline needs are interpreted, the rest
// are preserved as zeros on write.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pddwi/core.hpp"

namespace pddwi {

struct FormatError : DataError {
    using DataError::DataError;
};

enum class NiftiType : std::int16_t {
    u8 = 2,
    i16 = 4,
    f32 = 16,
    f64 = 64,
};

struct NiftiVolume {
    std::vector<std::size_t> shape;  // (nx, ny, nz[, nt]), x fastest in data
    Spacing spacing;                 // (dz, dy, dx) from pixdim[3..1]
    std::vector<double> data;        // scaled values, x fastest
};

namespace nifti_detail {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kOffSizeof = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffMagic = 344;

template <typename T>
T load_le(const unsigned char* p, bool swap) {
    unsigned char buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = swap ? p[sizeof(T) - 1 - i] : p[i];
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

template <typename T>
void store_le(unsigned char* p, T v) {
    std::memcpy(p, &v, sizeof(T));  // host assumed little-endian on write
}

inline std::size_t element_size(std::int16_t datatype) {
    switch (static_cast<NiftiType>(datatype)) {
        case NiftiType::u8: return 1;
        case NiftiType::i16: return 2;
        case NiftiType::f32: return 4;
        case NiftiType::f64: return 8;
    }
    return 0;
}

}  // namespace nifti_detail

inline NiftiVolume read_nifti(const std::string& path) {
    namespace nd = nifti_detail;

    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("nifti: cannot open '" + path + "'");

    std::vector<unsigned char> hdr(nd::kHeaderSize);
    in.read(reinterpret_cast<char*>(hdr.data()), static_cast<std::streamsize>(hdr.size()));
    if (in.gcount() != static_cast<std::streamsize>(nd::kHeaderSize))
        throw FormatError("nifti: '" + path + "': truncated header (offset 0)");

    bool swap = false;
    std::int32_t sizeof_hdr = nd::load_le<std::int32_t>(hdr.data() + nd::kOffSizeof, false);
    if (sizeof_hdr != 348) {
        sizeof_hdr = nd::load_le<std::int32_t>(hdr.data() + nd::kOffSizeof, true);
        if (sizeof_hdr != 348)
            throw FormatError("nifti: '" + path + "': bad sizeof_hdr (offset 0)");
        swap = true;
    }

    char magic[4];
    std::memcpy(magic, hdr.data() + nd::kOffMagic, 4);
    if (std::memcmp(magic, "ni1", 3) == 0)
        throw FormatError("nifti: '" + path + "': two-file (.hdr/.img) layout not supported "
                          "(offset 344)");
    if (std::memcmp(magic, "n+1", 3) != 0)
        throw FormatError("nifti: '" + path + "': bad magic (offset 344)");

    const auto ndim = nd::load_le<std::int16_t>(hdr.data() + nd::kOffDim, swap);
    if (ndim < 1 || ndim > 7)
        throw FormatError("nifti: '" + path + "': dim[0] out of range (offset 40)");
    if (ndim != 3 && ndim != 4)
        throw FormatError("nifti: '" + path + "': expected a 3D or 4D volume, got dim[0]=" +
                          std::to_string(ndim));

    NiftiVolume vol;
    std::size_t count = 1;
    for (int d = 1; d <= ndim; ++d) {
        const auto n = nd::load_le<std::int16_t>(hdr.data() + nd::kOffDim + 2 * d, swap);
        if (n < 1)
            throw FormatError("nifti: '" + path + "': non-positive dim[" + std::to_string(d) +
                              "] (offset " + std::to_string(nd::kOffDim + 2 * d) + ")");
        vol.shape.push_back(static_cast<std::size_t>(n));
        count *= static_cast<std::size_t>(n);
    }

    const double dx = nd::load_le<float>(hdr.data() + nd::kOffPixdim + 4, swap);
    const double dy = nd::load_le<float>(hdr.data() + nd::kOffPixdim + 8, swap);
    const double dz = nd::load_le<float>(hdr.data() + nd::kOffPixdim + 12, swap);
    vol.spacing = {dz, dy, dx};

    const auto datatype = nd::load_le<std::int16_t>(hdr.data() + nd::kOffDatatype, swap);
    const std::size_t esize = nd::element_size(datatype);
    if (esize == 0)
        throw FormatError("nifti: '" + path + "': unsupported datatype code " +
                          std::to_string(datatype) + " (offset 70)");

    const auto vox_offset = nd::load_le<float>(hdr.data() + nd::kOffVoxOffset, swap);
    if (vox_offset < 348.0f)
        throw FormatError("nifti: '" + path + "': vox_offset below header size (offset 108)");

    const double slope = nd::load_le<float>(hdr.data() + nd::kOffSclSlope, swap);
    const double inter = nd::load_le<float>(hdr.data() + nd::kOffSclInter, swap);

    in.seekg(static_cast<std::streamoff>(vox_offset), std::ios::beg);
    std::vector<unsigned char> raw(count * esize);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw FormatError("nifti: '" + path + "': truncated data (offset " +
                          std::to_string(static_cast<std::size_t>(vox_offset) +
                                         static_cast<std::size_t>(in.gcount())) +
                          ")");

    vol.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char* p = raw.data() + i * esize;
        double v = 0.0;
        switch (static_cast<NiftiType>(datatype)) {
            case NiftiType::u8: v = static_cast<double>(*p); break;
            case NiftiType::i16: v = static_cast<double>(nd::load_le<std::int16_t>(p, swap)); break;
            case NiftiType::f32: v = static_cast<double>(nd::load_le<float>(p, swap)); break;
            case NiftiType::f64: v = nd::load_le<double>(p, swap); break;
        }
        vol.data[i] = slope != 0.0 ? v * slope + inter : v;
    }
    return vol;
}

// Writes little-endian with vox_offset 352 and no scaling (slope 1,
// intercept 0). Data is cast to the requested payload type: f32 narrows
// doubles, u8 stores the value truncated to 0..255 (intended for masks).
inline void write_nifti(const std::string& path, const std::vector<std::size_t>& shape,
                        const Spacing& spacing, const std::vector<double>& data,
                        NiftiType type = NiftiType::f32) {
    namespace nd = nifti_detail;

    if (shape.size() != 3 && shape.size() != 4)
        throw std::invalid_argument("write_nifti: shape must be 3D or 4D");
    std::size_t count = 1;
    for (auto n : shape) count *= n;
    if (count != data.size()) throw std::invalid_argument("write_nifti: shape/data mismatch");
    if (type != NiftiType::f32 && type != NiftiType::u8 && type != NiftiType::f64)
        throw std::invalid_argument("write_nifti: unsupported output datatype");

    std::vector<unsigned char> hdr(nd::kHeaderSize, 0);
    nd::store_le<std::int32_t>(hdr.data() + nd::kOffSizeof, 348);
    nd::store_le<std::int16_t>(hdr.data() + nd::kOffDim,
                               static_cast<std::int16_t>(shape.size()));
    for (std::size_t d = 0; d < 7; ++d) {
        const std::int16_t n = d < shape.size() ? static_cast<std::int16_t>(shape[d]) : 1;
        nd::store_le<std::int16_t>(hdr.data() + nd::kOffDim + 2 * (d + 1), n);
    }
    nd::store_le<std::int16_t>(hdr.data() + nd::kOffDatatype, static_cast<std::int16_t>(type));
    const std::int16_t bitpix = static_cast<std::int16_t>(8 * nd::element_size(
                                    static_cast<std::int16_t>(type)));
    nd::store_le<std::int16_t>(hdr.data() + nd::kOffBitpix, bitpix);
    nd::store_le<float>(hdr.data() + nd::kOffPixdim, 1.0f);
    nd::store_le<float>(hdr.data() + nd::kOffPixdim + 4, static_cast<float>(spacing.dx));
    nd::store_le<float>(hdr.data() + nd::kOffPixdim + 8, static_cast<float>(spacing.dy));
    nd::store_le<float>(hdr.data() + nd::kOffPixdim + 12, static_cast<float>(spacing.dz));
    if (shape.size() == 4) nd::store_le<float>(hdr.data() + nd::kOffPixdim + 16, 1.0f);
    nd::store_le<float>(hdr.data() + nd::kOffVoxOffset, 352.0f);
    nd::store_le<float>(hdr.data() + nd::kOffSclSlope, 1.0f);
    nd::store_le<float>(hdr.data() + nd::kOffSclInter, 0.0f);
    std::memcpy(hdr.data() + nd::kOffMagic, "n+1", 4);

    std::vector<unsigned char> payload;
    const std::size_t esize = nd::element_size(static_cast<std::int16_t>(type));
    payload.resize(count * esize);
    for (std::size_t i = 0; i < count; ++i) {
        unsigned char* p = payload.data() + i * esize;
        switch (type) {
            case NiftiType::u8: {
                const double clamped = std::clamp(data[i], 0.0, 255.0);
                *p = static_cast<unsigned char>(clamped);
                break;
            }
            case NiftiType::f32: {
                const float f = static_cast<float>(data[i]);
                nd::store_le<float>(p, f);
                break;
            }
            case NiftiType::f64: nd::store_le<double>(p, data[i]); break;
            case NiftiType::i16: break;  // rejected above
        }
    }

    // Atomic publish: write a sibling temp file, then rename over the target.
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw FormatError("nifti: cannot create '" + tmp.string() + "'");
        out.write(reinterpret_cast<const char*>(hdr.data()),
                  static_cast<std::streamsize>(hdr.size()));
        const char pad[4] = {0, 0, 0, 0};
        out.write(pad, 4);
        out.write(reinterpret_cast<const char*>(payload.data()),
                  static_cast<std::streamsize>(payload.size()));
        if (!out) throw FormatError("nifti: write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

}  // namespace pddwi
