// File formats: MetaImage-subset volume reader/writer, control-point lists,
// and the metric report. All payloads little-endian, x fastest-varying.
#pragma once

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <variant>

#include "mctrace/core.hpp"

namespace mctrace {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ElementType { UInt8, Int16, Float32 };

inline const char* element_type_name(ElementType t) {
    switch (t) {
        case ElementType::UInt8: return "MET_UCHAR";
        case ElementType::Int16: return "MET_SHORT";
        case ElementType::Float32: return "MET_FLOAT";
    }
    return "?";
}

inline std::size_t element_size(ElementType t) {
    return t == ElementType::UInt8 ? 1 : t == ElementType::Int16 ? 2 : 4;
}

namespace detail {

inline double parse_double(const std::string& tok, const std::string& context) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || p != last)
        throw ParseError("invalid number '" + tok + "' in " + context);
    return v;
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Volumes (MetaImage subset: .mhd header + .raw payload, or LOCAL inline)

struct VolumeHeader {
    Index3 dim_size{};
    Spacing element_spacing{};
    Vec3 offset{};
    ElementType element_type = ElementType::Float32;
    std::string data_file;  // "LOCAL" or a sibling file name
};

namespace detail {

inline VolumeHeader parse_header(std::istream& in, std::size_t& header_bytes) {
    VolumeHeader h;
    bool have_dims = false, have_type = false, have_data = false;
    std::string line;
    header_bytes = 0;
    while (std::getline(in, line)) {
        header_bytes += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("header line without '=': '" + line + "'");
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "ObjectType") {
            if (value != "Image") throw ParseError("ObjectType must be Image");
        } else if (key == "NDims") {
            if (value != "3") throw ParseError("NDims must be 3, got '" + value + "'");
        } else if (key == "DimSize") {
            auto toks = split_ws(value);
            if (toks.size() != 3) throw ParseError("DimSize needs 3 values");
            for (int a = 0; a < 3; ++a) {
                double v = parse_double(toks[a], "DimSize");
                if (v < 1) throw ParseError("DimSize must be positive");
                h.dim_size[a] = static_cast<int>(v);
            }
            have_dims = true;
        } else if (key == "ElementSpacing") {
            auto toks = split_ws(value);
            if (toks.size() != 3) throw ParseError("ElementSpacing needs 3 values");
            h.element_spacing = Spacing(parse_double(toks[0], "ElementSpacing"),
                                        parse_double(toks[1], "ElementSpacing"),
                                        parse_double(toks[2], "ElementSpacing"));
        } else if (key == "Offset") {
            auto toks = split_ws(value);
            if (toks.size() != 3) throw ParseError("Offset needs 3 values");
            h.offset = Vec3(parse_double(toks[0], "Offset"), parse_double(toks[1], "Offset"),
                            parse_double(toks[2], "Offset"));
        } else if (key == "ElementType") {
            if (value == "MET_UCHAR") h.element_type = ElementType::UInt8;
            else if (value == "MET_SHORT") h.element_type = ElementType::Int16;
            else if (value == "MET_FLOAT") h.element_type = ElementType::Float32;
            else throw ParseError("unsupported ElementType '" + value + "'");
            have_type = true;
        } else if (key == "ElementByteOrderMSB") {
            if (value != "False") throw ParseError("ElementByteOrderMSB must be False");
        } else if (key == "ElementDataFile") {
            h.data_file = value;
            have_data = true;
            break;  // payload or external reference follows
        } else {
            throw ParseError("unknown header key '" + key + "'");
        }
    }
    if (!have_dims) throw ParseError("missing header key DimSize");
    if (!have_type) throw ParseError("missing header key ElementType");
    if (!have_data) throw ParseError("missing header key ElementDataFile");
    return h;
}

inline std::vector<char> read_payload(const std::filesystem::path& header_path,
                                      const VolumeHeader& h, std::ifstream& in) {
    std::size_t expect = static_cast<std::size_t>(h.dim_size[0]) * h.dim_size[1] *
                         h.dim_size[2] * element_size(h.element_type);
    std::vector<char> payload;
    if (h.data_file == "LOCAL") {
        payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else {
        auto raw_path = header_path.parent_path() / h.data_file;
        std::ifstream raw(raw_path, std::ios::binary);
        if (!raw) throw ParseError("cannot open ElementDataFile '" + raw_path.string() + "'");
        payload.assign(std::istreambuf_iterator<char>(raw), std::istreambuf_iterator<char>());
    }
    if (payload.size() != expect)
        throw ParseError("payload size mismatch: expected " + std::to_string(expect) +
                         " bytes, got " + std::to_string(payload.size()));
    return payload;
}

}  // namespace detail

using VolumeVariant = std::variant<ScalarVolume, BinaryVolume>;

// Reads a volume; uint8 payloads become BinaryVolume (values must be 0/1),
// int16/float32 payloads become ScalarVolume.
inline VolumeVariant read_volume(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::size_t header_bytes = 0;
    VolumeHeader h = detail::parse_header(in, header_bytes);
    auto payload = detail::read_payload(path, h, in);

    GridGeometry geom;
    geom.dims = h.dim_size;
    geom.spacing = h.element_spacing;
    geom.origin = h.offset;
    geom.validate();

    if (h.element_type == ElementType::UInt8) {
        BinaryVolume bv(geom);
        for (std::size_t i = 0; i < payload.size(); ++i) {
            auto b = static_cast<std::uint8_t>(payload[i]);
            if (b > 1)
                throw ParseError("non-binary value " + std::to_string(b) +
                                 " at payload offset " + std::to_string(i));
            bv.data[i] = b;
        }
        return bv;
    }
    ScalarVolume sv(geom);
    if (h.element_type == ElementType::Int16) {
        for (std::size_t i = 0; i < sv.data.size(); ++i) {
            std::int16_t v;
            std::memcpy(&v, payload.data() + 2 * i, 2);
            sv.data[i] = static_cast<float>(v);
        }
    } else {
        std::memcpy(sv.data.data(), payload.data(), payload.size());
    }
    return sv;
}

inline BinaryVolume read_binary_volume(const std::filesystem::path& path) {
    auto v = read_volume(path);
    if (auto* bv = std::get_if<BinaryVolume>(&v)) return std::move(*bv);
    throw ParseError("'" + path.string() + "' is not a binary (MET_UCHAR 0/1) volume");
}

inline ScalarVolume read_scalar_volume(const std::filesystem::path& path) {
    auto v = read_volume(path);
    if (auto* sv = std::get_if<ScalarVolume>(&v)) return std::move(*sv);
    // Accept a binary volume as a 0/1-valued scalar field.
    auto& bv = std::get<BinaryVolume>(v);
    ScalarVolume sv(bv.geom);
    for (std::size_t i = 0; i < bv.data.size(); ++i) sv.data[i] = bv.data[i];
    return sv;
}

namespace detail {

inline void write_header(std::ostream& out, const GridGeometry& g, ElementType type,
                         const std::string& data_file) {
    out << "ObjectType = Image\n";
    out << "NDims = 3\n";
    out << "DimSize = " << g.dims[0] << " " << g.dims[1] << " " << g.dims[2] << "\n";
    out << "ElementSpacing = " << format_double(g.spacing.sx) << " "
        << format_double(g.spacing.sy) << " " << format_double(g.spacing.sz) << "\n";
    out << "Offset = " << format_double(g.origin.x) << " " << format_double(g.origin.y)
        << " " << format_double(g.origin.z) << "\n";
    out << "ElementType = " << element_type_name(type) << "\n";
    out << "ElementByteOrderMSB = False\n";
    out << "ElementDataFile = " << data_file << "\n";
}

inline void write_files(const std::filesystem::path& path, const GridGeometry& g,
                        ElementType type, const char* payload, std::size_t payload_size,
                        bool local) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    if (local) {
        write_header(out, g, type, "LOCAL");
        out.write(payload, static_cast<std::streamsize>(payload_size));
    } else {
        auto raw_name = path.stem().string() + ".raw";
        write_header(out, g, type, raw_name);
        std::ofstream raw(path.parent_path() / raw_name, std::ios::binary);
        if (!raw) throw std::runtime_error("cannot write raw payload for '" + path.string() + "'");
        raw.write(payload, static_cast<std::streamsize>(payload_size));
        if (!raw) throw std::runtime_error("raw payload write failed");
    }
    if (!out) throw std::runtime_error("volume write failed for '" + path.string() + "'");
}

}  // namespace detail

inline void write_volume(const BinaryVolume& vol, const std::filesystem::path& path,
                         bool local_payload = false) {
    detail::write_files(path, vol.geom, ElementType::UInt8,
                        reinterpret_cast<const char*>(vol.data.data()), vol.data.size(),
                        local_payload);
}

inline void write_volume(const ScalarVolume& vol, const std::filesystem::path& path,
                         ElementType type = ElementType::Float32, bool local_payload = false) {
    if (type == ElementType::UInt8)
        throw std::invalid_argument("write scalar volumes as MET_SHORT or MET_FLOAT");
    if (type == ElementType::Int16) {
        std::vector<std::int16_t> buf(vol.data.size());
        for (std::size_t i = 0; i < buf.size(); ++i)
            buf[i] = static_cast<std::int16_t>(round_half_away(vol.data[i]));
        detail::write_files(path, vol.geom, type, reinterpret_cast<const char*>(buf.data()),
                            buf.size() * 2, local_payload);
    } else {
        detail::write_files(path, vol.geom, type,
                            reinterpret_cast<const char*>(vol.data.data()),
                            vol.data.size() * 4, local_payload);
    }
}

// ---------------------------------------------------------------------------
// Control points: ASCII "x y z" per line, millimeters, '#' comments allowed.

enum class CanalSide { Left, Right };

struct ControlPointSet {
    std::vector<Vec3> points;  // world mm, order preserved as read
    CanalSide side = CanalSide::Left;
};

inline ControlPointSet read_control_points(const std::filesystem::path& path,
                                           CanalSide side = CanalSide::Left) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    ControlPointSet cps;
    cps.side = side;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        auto toks = detail::split_ws(line);
        if (toks.size() != 3)
            throw ParseError("expected 3 coordinates at line " + std::to_string(line_no) +
                             " of '" + path.string() + "'");
        Vec3 p;
        try {
            p = Vec3(detail::parse_double(toks[0], "x"), detail::parse_double(toks[1], "y"),
                     detail::parse_double(toks[2], "z"));
        } catch (const ParseError&) {
            throw ParseError("non-numeric token at line " + std::to_string(line_no) + " of '" +
                             path.string() + "'");
        }
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw ParseError("non-finite coordinate at line " + std::to_string(line_no));
        cps.points.push_back(p);
    }
    if (cps.points.size() < 2)
        throw ParseError("'" + path.string() + "' contains fewer than 2 control points");
    return cps;
}

inline void write_control_points(const std::vector<Vec3>& points,
                                 const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    for (const auto& p : points)
        out << detail::format_double(p.x) << " " << detail::format_double(p.y) << " "
            << detail::format_double(p.z) << "\n";
    if (!out) throw std::runtime_error("control point write failed");
}

// ---------------------------------------------------------------------------
// Metric report: "key value" per line, fixed keys, 6 decimals.

struct MetricReport {
    std::optional<double> precision, recall, f1, iou_canal, iou_background, miou;
    std::optional<double> mcd_gp_mm, mcd_pg_mm;
    std::vector<std::string> undefined;  // metric keys whose 0 is a 0/0 case
};

inline void write_report(const MetricReport& r, std::ostream& out) {
    const std::pair<const char*, const std::optional<double>*> fields[] = {
        {"precision", &r.precision},       {"recall", &r.recall},
        {"f1", &r.f1},                     {"iou_canal", &r.iou_canal},
        {"iou_background", &r.iou_background}, {"miou", &r.miou},
        {"mcd_gp_mm", &r.mcd_gp_mm},       {"mcd_pg_mm", &r.mcd_pg_mm},
    };
    std::string missing;
    for (const auto& [key, value] : fields)
        if (!value->has_value()) missing += missing.empty() ? key : std::string(", ") + key;
    if (!missing.empty())
        throw std::invalid_argument("metric report missing field(s): " + missing);
    char buf[64];
    for (const auto& [key, value] : fields) {
        std::snprintf(buf, sizeof(buf), "%.6f", **value);
        out << key << " " << buf << "\n";
    }
    if (!r.undefined.empty()) {
        out << "undefined";
        for (const auto& k : r.undefined) out << " " << k;
        out << "\n";
    }
}

inline void write_report(const MetricReport& r, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_report(r, out);
    if (!out) throw std::runtime_error("report write failed");
}

}  // namespace mctrace
