#include "sparsereg/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace sparsereg {

namespace {

enum class Dtype { f32, i16, u16 };

std::size_t dtype_size(Dtype d) { return d == Dtype::f32 ? 4 : 2; }

const char* dtype_name(Dtype d) {
    switch (d) {
        case Dtype::f32: return "f32";
        case Dtype::i16: return "i16";
        default: return "u16";
    }
}

Dtype dtype_from_name(const std::string& s, std::int64_t offset) {
    if (s == "f32") return Dtype::f32;
    if (s == "i16") return Dtype::i16;
    if (s == "u16") return Dtype::u16;
    throw IoError("svr: unknown dtype '" + s + "'", offset);
}

struct SvrHeader {
    std::string role;
    Dtype dtype = Dtype::f32;
    GridSize dims;
    Spacing spacing;
    int components = 1;
    std::int64_t payload_offset = 0;
};

void write_header(std::ostream& out, const std::string& role, Dtype dtype, GridSize dims,
                  Spacing spacing, int components) {
    out << "format: svr1\n";
    out << "role: " << role << "\n";
    out << "dtype: " << dtype_name(dtype) << "\n";
    out << "dims: " << dims.x << " " << dims.y << " " << dims.z << "\n";
    std::ostringstream sp;
    sp << spacing.x << " " << spacing.y << " " << spacing.z;
    out << "spacing: " << sp.str() << "\n";
    out << "components: " << components << "\n";
    out << "\n";
}

void write_payload(std::ostream& out, const void* data, std::size_t bytes,
                   const std::string& path) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw IoError("svr: failed writing payload to " + path);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("svr: cannot open " + path + " for writing");
    return out;
}

SvrHeader read_header(std::istream& in, const std::string& path) {
    SvrHeader h;
    std::map<std::string, std::string> kv;
    std::int64_t offset = 0;
    std::string line;
    bool terminated = false;
    while (std::getline(in, line)) {
        const std::int64_t line_start = offset;
        offset += static_cast<std::int64_t>(line.size()) + 1;
        if (line.empty()) {
            terminated = true;
            break;
        }
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw IoError("svr: malformed header line (no ':') in " + path, line_start);
        }
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        kv[key] = value;
    }
    if (!terminated) {
        throw IoError("svr: header not terminated by a blank line in " + path, offset);
    }
    h.payload_offset = offset;

    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) {
            throw IoError(std::string("svr: missing header key '") + key + "' in " + path,
                          offset);
        }
        return it->second;
    };
    if (need("format") != "svr1") {
        throw IoError("svr: unknown format '" + kv["format"] + "' in " + path, 0);
    }
    h.role = need("role");
    h.dtype = dtype_from_name(need("dtype"), offset);
    {
        std::istringstream ss(need("dims"));
        if (!(ss >> h.dims.x >> h.dims.y >> h.dims.z) || h.dims.x <= 0 || h.dims.y <= 0 ||
            h.dims.z <= 0) {
            throw IoError("svr: malformed dims '" + kv["dims"] + "' in " + path, offset);
        }
    }
    {
        std::istringstream ss(need("spacing"));
        if (!(ss >> h.spacing.x >> h.spacing.y >> h.spacing.z)) {
            throw IoError("svr: malformed spacing '" + kv["spacing"] + "' in " + path, offset);
        }
    }
    {
        std::istringstream ss(need("components"));
        if (!(ss >> h.components) || h.components < 1) {
            throw IoError("svr: malformed components '" + kv["components"] + "' in " + path,
                          offset);
        }
    }
    if (h.role == "field" && h.components != 3) {
        throw IoError("svr: field role requires 3 components, got " +
                          std::to_string(h.components) + " in " + path,
                      offset);
    }
    if (h.role != "field" && h.components != 1) {
        throw IoError("svr: role '" + h.role + "' requires 1 component in " + path, offset);
    }
    return h;
}

std::vector<char> read_payload(std::istream& in, const SvrHeader& h, const std::string& path) {
    const std::int64_t expected = h.dims.voxel_count() * h.components *
                                  static_cast<std::int64_t>(dtype_size(h.dtype));
    std::vector<char> bytes(static_cast<std::size_t>(expected));
    in.read(bytes.data(), expected);
    const std::int64_t got = in.gcount();
    if (got < expected) {
        throw IoError("svr: truncated payload in " + path + ": expected " +
                          std::to_string(expected) + " bytes, got " + std::to_string(got),
                      h.payload_offset + got);
    }
    char extra;
    if (in.read(&extra, 1)) {
        throw IoError("svr: trailing bytes after payload in " + path,
                      h.payload_offset + expected);
    }
    return bytes;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("svr: cannot open " + path);
    return in;
}

SvrHeader read_checked(std::ifstream& in, const std::string& path, const std::string& want_role) {
    SvrHeader h = read_header(in, path);
    if (h.role != want_role) {
        throw IoError("svr: expected role '" + want_role + "' but found '" + h.role + "' in " +
                      path);
    }
    return h;
}

std::vector<float> decode_scalars(const SvrHeader& h, const std::vector<char>& bytes) {
    const std::size_t n = static_cast<std::size_t>(h.dims.voxel_count()) *
                          static_cast<std::size_t>(h.components);
    std::vector<float> out(n);
    switch (h.dtype) {
        case Dtype::f32:
            std::memcpy(out.data(), bytes.data(), n * 4);
            break;
        case Dtype::i16: {
            std::vector<std::int16_t> raw(n);
            std::memcpy(raw.data(), bytes.data(), n * 2);
            for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(raw[i]);
            break;
        }
        case Dtype::u16: {
            std::vector<std::uint16_t> raw(n);
            std::memcpy(raw.data(), bytes.data(), n * 2);
            for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(raw[i]);
            break;
        }
    }
    return out;
}

}  // namespace

void write_svr(const std::string& path, const Volume& vol) {
    vol.validate("write_svr");
    auto out = open_out(path);
    write_header(out, "intensity", Dtype::f32, vol.size, vol.spacing, 1);
    write_payload(out, vol.data.data(), vol.data.size() * 4, path);
}

void write_svr(const std::string& path, const ConfidenceMask& mask) {
    mask.validate("write_svr");
    auto out = open_out(path);
    write_header(out, "mask", Dtype::f32, mask.size, Spacing{}, 1);
    write_payload(out, mask.weights.data(), mask.weights.size() * 4, path);
}

void write_svr(const std::string& path, const LabelMap& labels) {
    labels.validate("write_svr");
    std::vector<std::uint16_t> raw(labels.labels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const std::int32_t l = labels.labels[i];
        if (l > 0xFFFF) {
            throw IoError("write_svr: label " + std::to_string(l) + " does not fit u16");
        }
        raw[i] = static_cast<std::uint16_t>(l);
    }
    auto out = open_out(path);
    write_header(out, "labels", Dtype::u16, labels.size, Spacing{}, 1);
    write_payload(out, raw.data(), raw.size() * 2, path);
}

void write_svr(const std::string& path, const DisplacementField& field) {
    field.validate("write_svr");
    const auto n = static_cast<std::size_t>(field.size.voxel_count());
    std::vector<float> raw(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        raw[3 * i] = static_cast<float>(field.ux[i]);
        raw[3 * i + 1] = static_cast<float>(field.uy[i]);
        raw[3 * i + 2] = static_cast<float>(field.uz[i]);
    }
    auto out = open_out(path);
    write_header(out, "field", Dtype::f32, field.size, Spacing{}, 3);
    write_payload(out, raw.data(), raw.size() * 4, path);
}

Volume read_svr_volume(const std::string& path) {
    auto in = open_in(path);
    const SvrHeader h = read_checked(in, path, "intensity");
    const auto bytes = read_payload(in, h, path);
    Volume vol(h.dims, 0.0f, h.spacing);
    vol.data = decode_scalars(h, bytes);
    try {
        vol.validate("read_svr " + path);
    } catch (const InvalidInputError& e) {
        throw IoError(e.what());
    }
    return vol;
}

ConfidenceMask read_svr_mask(const std::string& path) {
    auto in = open_in(path);
    const SvrHeader h = read_checked(in, path, "mask");
    if (h.dtype != Dtype::f32) throw IoError("svr: mask payload must be f32 in " + path);
    const auto bytes = read_payload(in, h, path);
    ConfidenceMask mask(h.dims);
    mask.weights = decode_scalars(h, bytes);
    try {
        mask.validate("read_svr " + path);
    } catch (const InvalidInputError& e) {
        throw IoError(e.what());
    }
    return mask;
}

LabelMap read_svr_labels(const std::string& path) {
    auto in = open_in(path);
    const SvrHeader h = read_checked(in, path, "labels");
    if (h.dtype == Dtype::f32) throw IoError("svr: label payload must be i16 or u16 in " + path);
    const auto bytes = read_payload(in, h, path);
    LabelMap labels(h.dims, 0);
    const auto scalars = decode_scalars(h, bytes);
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        if (scalars[i] < 0.0f) {
            throw IoError("svr: negative label " + std::to_string(scalars[i]) + " in " + path);
        }
        labels.labels[i] = static_cast<std::int32_t>(scalars[i]);
    }
    return labels;
}

DisplacementField read_svr_field(const std::string& path) {
    auto in = open_in(path);
    const SvrHeader h = read_checked(in, path, "field");
    if (h.dtype != Dtype::f32) throw IoError("svr: field payload must be f32 in " + path);
    const auto bytes = read_payload(in, h, path);
    const auto scalars = decode_scalars(h, bytes);
    DisplacementField field(h.dims);
    const auto n = static_cast<std::size_t>(h.dims.voxel_count());
    for (std::size_t i = 0; i < n; ++i) {
        field.ux[i] = scalars[3 * i];
        field.uy[i] = scalars[3 * i + 1];
        field.uz[i] = scalars[3 * i + 2];
    }
    try {
        field.validate("read_svr " + path);
    } catch (const InvalidInputError& e) {
        throw IoError(e.what());
    }
    return field;
}

namespace {

struct NiftiInfo {
    GridSize dims;
    Spacing spacing;
    std::int16_t datatype = 0;
    float scl_slope = 0.0f;
    float scl_inter = 0.0f;
    std::vector<float> values;  // scaled, x-fastest
};

NiftiInfo read_nifti_values(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("nifti: cannot open " + path);
    std::vector<char> header(348);
    in.read(header.data(), 348);
    if (in.gcount() < 348) throw UnsupportedFileError("nifti: file shorter than the 348-byte header: " + path);

    auto read_i32 = [&](std::size_t off) {
        std::int32_t v;
        std::memcpy(&v, header.data() + off, 4);
        return v;
    };
    auto read_i16 = [&](std::size_t off) {
        std::int16_t v;
        std::memcpy(&v, header.data() + off, 2);
        return v;
    };
    auto read_f32 = [&](std::size_t off) {
        float v;
        std::memcpy(&v, header.data() + off, 4);
        return v;
    };

    if (read_i32(0) != 348) {
        throw UnsupportedFileError("nifti: sizeof_hdr is not 348 (wrong endianness or not NIfTI-1): " +
                                   path);
    }
    const char* magic = header.data() + 344;
    if (std::strncmp(magic, "n+1", 3) != 0) {
        if (std::strncmp(magic, "ni1", 3) == 0) {
            throw UnsupportedFileError("nifti: detached header/image pairs (magic 'ni1') are unsupported: " +
                                       path);
        }
        throw UnsupportedFileError("nifti: bad magic (expected 'n+1'): " + path);
    }
    const std::int16_t ndim = read_i16(40);
    if (ndim != 3) {
        throw UnsupportedFileError("nifti: dim[0] = " + std::to_string(ndim) +
                                   " unsupported (need 3): " + path);
    }

    NiftiInfo info;
    info.dims = GridSize{read_i16(42), read_i16(44), read_i16(46)};
    if (info.dims.x <= 0 || info.dims.y <= 0 || info.dims.z <= 0) {
        throw UnsupportedFileError("nifti: non-positive dim[1..3]: " + path);
    }
    auto pix = [&](std::size_t k) {
        const float p = read_f32(76 + 4 * k);
        return p > 0.0f ? p : 1.0f;
    };
    info.spacing = Spacing{pix(1), pix(2), pix(3)};
    info.datatype = read_i16(70);
    if (info.datatype != 4 && info.datatype != 16) {
        throw UnsupportedFileError("nifti: datatype " + std::to_string(info.datatype) +
                                   " unsupported (need 4 = i16 or 16 = f32): " + path);
    }
    info.scl_slope = read_f32(112);
    info.scl_inter = read_f32(116);

    const float vox_offset = read_f32(108);
    if (vox_offset < 348.0f) {
        throw UnsupportedFileError("nifti: vox_offset " + std::to_string(vox_offset) +
                                   " overlaps the header: " + path);
    }
    in.seekg(static_cast<std::streamoff>(vox_offset), std::ios::beg);

    const std::int64_t count = info.dims.voxel_count();
    info.values.resize(static_cast<std::size_t>(count));
    if (info.datatype == 16) {
        in.read(reinterpret_cast<char*>(info.values.data()), count * 4);
        if (in.gcount() < count * 4) {
            throw IoError("nifti: truncated payload in " + path,
                          static_cast<std::int64_t>(vox_offset) + in.gcount());
        }
    } else {
        std::vector<std::int16_t> raw(static_cast<std::size_t>(count));
        in.read(reinterpret_cast<char*>(raw.data()), count * 2);
        if (in.gcount() < count * 2) {
            throw IoError("nifti: truncated payload in " + path,
                          static_cast<std::int64_t>(vox_offset) + in.gcount());
        }
        for (std::size_t i = 0; i < raw.size(); ++i) {
            info.values[i] = static_cast<float>(raw[i]);
        }
    }
    if (info.scl_slope != 0.0f) {
        for (float& v : info.values) v = v * info.scl_slope + info.scl_inter;
    }
    for (float v : info.values) {
        if (!std::isfinite(v)) throw IoError("nifti: non-finite value in " + path);
    }
    return info;
}

}  // namespace

Volume read_nifti1(const std::string& path) {
    NiftiInfo info = read_nifti_values(path);
    Volume vol(info.dims, 0.0f, info.spacing);
    vol.data = std::move(info.values);
    return vol;
}

void write_pattern(const std::string& path, const SliceAcquisitionPattern& pattern) {
    std::ofstream out(path);
    if (!out) throw IoError("pattern: cannot open " + path + " for writing");
    out << "axis: " << axis_name(pattern.axis) << "\n";
    out << "indices:";
    for (int i : pattern.indices) out << " " << i;
    out << "\n";
}

SliceAcquisitionPattern read_pattern(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("pattern: cannot open " + path);
    SliceAcquisitionPattern pattern;
    std::string line;
    bool have_axis = false, have_indices = false;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "axis:") {
            std::string name;
            ss >> name;
            pattern.axis = axis_from_name(name);
            have_axis = true;
        } else if (key == "indices:") {
            int v;
            while (ss >> v) pattern.indices.push_back(v);
            have_indices = true;
        }
    }
    if (!have_axis || !have_indices || pattern.indices.empty()) {
        throw IoError("pattern: missing axis or indices in " + path);
    }
    return pattern;
}

LabelMap read_nifti1_labels(const std::string& path) {
    const NiftiInfo info = read_nifti_values(path);
    LabelMap labels(info.dims, 0);
    for (std::size_t i = 0; i < info.values.size(); ++i) {
        const float v = info.values[i];
        const float r = std::round(v);
        if (v < 0.0f || std::fabs(v - r) > 1e-3f) {
            throw IoError("nifti: value " + std::to_string(v) +
                          " is not a non-negative integer label in " + path);
        }
        labels.labels[i] = static_cast<std::int32_t>(r);
    }
    return labels;
}

}  // namespace sparsereg
