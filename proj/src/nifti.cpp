#include "voxdef/nifti.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include <zlib.h>

#include "voxdef/errors.hpp"

namespace voxdef {

namespace {

// NIfTI-1 header, naturally aligned to exactly 348 bytes.
struct Nifti1Header {
    std::int32_t sizeof_hdr;
    char data_type[10];
    char db_name[18];
    std::int32_t extents;
    std::int16_t session_error;
    char regular;
    char dim_info;
    std::int16_t dim[8];
    float intent_p1, intent_p2, intent_p3;
    std::int16_t intent_code;
    std::int16_t datatype;
    std::int16_t bitpix;
    std::int16_t slice_start;
    float pixdim[8];
    float vox_offset;
    float scl_slope;
    float scl_inter;
    std::int16_t slice_end;
    char slice_code;
    char xyzt_units;
    float cal_max, cal_min;
    float slice_duration;
    float toffset;
    std::int32_t glmax, glmin;
    char descrip[80];
    char aux_file[24];
    std::int16_t qform_code, sform_code;
    float quatern_b, quatern_c, quatern_d;
    float qoffset_x, qoffset_y, qoffset_z;
    float srow_x[4], srow_y[4], srow_z[4];
    char intent_name[16];
    char magic[4];
};
static_assert(sizeof(Nifti1Header) == 348, "NIfTI-1 header must be 348 bytes");

constexpr std::int16_t DT_UINT8 = 2;
constexpr std::int16_t DT_INT16 = 4;
constexpr std::int16_t DT_FLOAT32 = 16;
constexpr char XYZT_UNITS_MM = 2;

// File handle that reads gzip and plain files alike (zlib passes plain
// bytes through untouched).
class GzReader {
  public:
    explicit GzReader(const std::string& path) : path_(path) {
        f_ = gzopen(path.c_str(), "rb");
        if (!f_) throw IoError("cannot open '" + path + "' for reading");
    }
    ~GzReader() {
        if (f_) gzclose(f_);
    }
    GzReader(const GzReader&) = delete;
    GzReader& operator=(const GzReader&) = delete;

    void read_exact(void* dst, std::size_t n) {
        int got = gzread(f_, dst, unsigned(n));
        if (got < 0 || std::size_t(got) != n)
            throw FormatError("'" + path_ + "': truncated volume (wanted " +
                              std::to_string(n) + " bytes)");
    }
    void skip_to(std::size_t offset) {
        if (gzseek(f_, z_off_t(offset), SEEK_SET) < 0)
            throw FormatError("'" + path_ + "': cannot seek to data section");
    }

  private:
    std::string path_;
    gzFile f_ = nullptr;
};

struct RawVolume {
    LatticeGeometry geometry;
    std::int16_t datatype;
    std::vector<unsigned char> bytes; // one element per voxel, datatype-sized
    float scl_slope, scl_inter;
};

RawVolume read_raw(const std::string& path) {
    GzReader in(path);
    Nifti1Header hdr;
    in.read_exact(&hdr, sizeof(hdr));

    if (hdr.sizeof_hdr != 348) {
        // 0x5C010000 is 348 byte-swapped; call that out explicitly.
        std::int32_t swapped;
        unsigned char* p = reinterpret_cast<unsigned char*>(&hdr.sizeof_hdr);
        unsigned char q[4] = {p[3], p[2], p[1], p[0]};
        std::memcpy(&swapped, q, 4);
        if (swapped == 348)
            throw UnsupportedError("'" + path + "': big-endian NIfTI is not supported");
        throw FormatError("'" + path + "': not a NIfTI-1 file (sizeof_hdr=" +
                          std::to_string(hdr.sizeof_hdr) + ")");
    }
    if (std::strncmp(hdr.magic, "n+1", 3) != 0 || hdr.magic[3] != '\0')
        throw FormatError("'" + path + "': bad magic, expected single-file NIfTI-1 (\"n+1\")");

    const int ndim = hdr.dim[0];
    if (ndim != 2 && ndim != 3)
        throw GeometryError("'" + path + "': dim[0]=" + std::to_string(ndim) +
                            ", only 2-D and 3-D volumes are supported");
    std::size_t dims[3] = {1, 1, 1};
    double spacing[3] = {1, 1, 1};
    std::size_t count = 1;
    for (int a = 0; a < ndim; ++a) {
        if (hdr.dim[a + 1] < 3)
            throw GeometryError("'" + path + "': axis " + std::to_string(a) +
                                " has " + std::to_string(hdr.dim[a + 1]) +
                                " nodes, need at least 3");
        dims[a] = std::size_t(hdr.dim[a + 1]);
        if (!(hdr.pixdim[a + 1] > 0.0f))
            throw GeometryError("'" + path + "': non-positive pixdim on axis " +
                                std::to_string(a));
        spacing[a] = double(hdr.pixdim[a + 1]);
        count *= dims[a];
    }
    for (int a = ndim; a < 7; ++a)
        if (hdr.dim[a + 1] > 1)
            throw UnsupportedError("'" + path + "': trailing dimensions > 1 not supported");

    double origin[3] = {0, 0, 0};
    if (hdr.sform_code > 0) {
        origin[0] = double(hdr.srow_x[3]);
        origin[1] = double(hdr.srow_y[3]);
        origin[2] = double(hdr.srow_z[3]);
    }

    std::size_t elem;
    switch (hdr.datatype) {
        case DT_UINT8: elem = 1; break;
        case DT_INT16: elem = 2; break;
        case DT_FLOAT32: elem = 4; break;
        default:
            throw UnsupportedError("'" + path + "': datatype code " +
                                   std::to_string(hdr.datatype) +
                                   " not supported (uint8/int16/float32 only)");
    }
    if (hdr.bitpix != std::int16_t(elem * 8))
        throw FormatError("'" + path + "': bitpix " + std::to_string(hdr.bitpix) +
                          " inconsistent with datatype");

    std::size_t offset = std::size_t(hdr.vox_offset);
    if (offset < 348)
        throw FormatError("'" + path + "': vox_offset below header size");
    in.skip_to(offset);

    RawVolume raw;
    raw.geometry = LatticeGeometry(ndim, dims, spacing, origin);
    raw.datatype = hdr.datatype;
    raw.scl_slope = hdr.scl_slope;
    raw.scl_inter = hdr.scl_inter;
    raw.bytes.resize(count * elem);
    in.read_exact(raw.bytes.data(), raw.bytes.size());
    return raw;
}

double decode_value(const RawVolume& raw, std::size_t i) {
    double v;
    switch (raw.datatype) {
        case DT_UINT8: v = double(raw.bytes[i]); break;
        case DT_INT16: {
            std::int16_t s;
            std::memcpy(&s, raw.bytes.data() + 2 * i, 2);
            v = double(s);
            break;
        }
        default: {
            float f;
            std::memcpy(&f, raw.bytes.data() + 4 * i, 4);
            v = double(f);
            break;
        }
    }
    if (raw.scl_slope != 0.0f)
        v = double(raw.scl_slope) * v + double(raw.scl_inter);
    return v;
}

ScalarField to_scalar(const RawVolume& raw, const std::string& path) {
    std::vector<double> values(raw.geometry.node_count());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = decode_value(raw, i);
    ScalarField f(raw.geometry, std::move(values));
    require_finite(f, ("read_volume('" + path + "')").c_str());
    return f;
}

LabelVolume to_labels(const RawVolume& raw, const std::string& path) {
    if (raw.datatype == DT_FLOAT32)
        throw UnsupportedError("'" + path + "': float32 volume cannot be read as labels");
    std::vector<std::uint8_t> labels(raw.geometry.node_count());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double v = decode_value(raw, i);
        if (v < 0.0 || v > 255.0 || v != double(std::uint8_t(v)))
            throw UnsupportedError("'" + path + "': label value " + std::to_string(v) +
                                   " outside uint8 range");
        labels[i] = std::uint8_t(v);
    }
    return LabelVolume(raw.geometry, std::move(labels));
}

void fill_header(Nifti1Header& hdr, const LatticeGeometry& g, std::int16_t datatype,
                 std::int16_t bitpix) {
    std::memset(&hdr, 0, sizeof(hdr));
    hdr.sizeof_hdr = 348;
    hdr.regular = 'r';
    hdr.dim[0] = std::int16_t(g.ndim());
    for (int a = 0; a < 7; ++a) hdr.dim[a + 1] = 1;
    hdr.pixdim[0] = 1.0f;
    for (int a = 0; a < g.ndim(); ++a) {
        hdr.dim[a + 1] = std::int16_t(g.dim(a));
        hdr.pixdim[a + 1] = float(g.spacing(a));
    }
    hdr.datatype = datatype;
    hdr.bitpix = bitpix;
    hdr.vox_offset = 352.0f;
    hdr.scl_slope = 1.0f;
    hdr.scl_inter = 0.0f;
    hdr.xyzt_units = XYZT_UNITS_MM;
    std::strncpy(hdr.descrip, "voxdef", sizeof(hdr.descrip) - 1);
    // Diagonal sform carries spacing and origin; nothing else is encoded.
    hdr.sform_code = 1;
    float* rows[3] = {hdr.srow_x, hdr.srow_y, hdr.srow_z};
    for (int a = 0; a < 3; ++a) {
        rows[a][a] = (a < g.ndim()) ? float(g.spacing(a)) : 1.0f;
        rows[a][3] = (a < g.ndim()) ? float(g.origin(a)) : 0.0f;
    }
    std::memcpy(hdr.magic, "n+1", 4);
}

void write_bytes(const std::string& path, const Nifti1Header& hdr,
                 const unsigned char* data, std::size_t nbytes) {
    const char extender[4] = {0, 0, 0, 0};
    const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
    if (gz) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw IoError("cannot open '" + path + "' for writing");
        bool ok = gzwrite(f, &hdr, sizeof(hdr)) == int(sizeof(hdr)) &&
                  gzwrite(f, extender, 4) == 4 &&
                  (nbytes == 0 || gzwrite(f, data, unsigned(nbytes)) == int(nbytes));
        ok = (gzclose(f) == Z_OK) && ok;
        if (!ok) throw IoError("failed writing '" + path + "'");
    } else {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + path + "' for writing");
        f.write(reinterpret_cast<const char*>(&hdr), sizeof(hdr));
        f.write(extender, 4);
        f.write(reinterpret_cast<const char*>(data), std::streamsize(nbytes));
        if (!f) throw IoError("failed writing '" + path + "'");
    }
}

} // namespace

std::variant<ScalarField, LabelVolume> read_volume(const std::string& path) {
    RawVolume raw = read_raw(path);
    if (raw.datatype == DT_UINT8)
        return to_labels(raw, path);
    return to_scalar(raw, path);
}

ScalarField read_scalar_volume(const std::string& path) {
    return to_scalar(read_raw(path), path);
}

LabelVolume read_label_volume(const std::string& path) {
    return to_labels(read_raw(path), path);
}

void write_volume(const ScalarField& field, const std::string& path) {
    require_finite(field, "write_volume");
    Nifti1Header hdr;
    fill_header(hdr, field.geometry(), DT_FLOAT32, 32);
    std::vector<unsigned char> bytes(field.size() * 4);
    for (std::size_t i = 0; i < field.size(); ++i) {
        float f = float(field[i]);
        std::memcpy(bytes.data() + 4 * i, &f, 4);
    }
    write_bytes(path, hdr, bytes.data(), bytes.size());
}

void write_volume(const LabelVolume& labels, const std::string& path) {
    Nifti1Header hdr;
    fill_header(hdr, labels.geometry(), DT_UINT8, 8);
    write_bytes(path, hdr, labels.labels().data(), labels.labels().size());
}

} // namespace voxdef
