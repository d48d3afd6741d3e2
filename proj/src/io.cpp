#include "mdreg/io.hpp"

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mdreg/errors.hpp"

namespace mdreg {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("cannot read " + path);
    return std::move(buf).str();
}

// All writes go through a sibling temp file renamed into place, so readers
// never observe a half-written file.
void write_file(const std::string& path, const std::string& bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::uint64_t decode_le(const unsigned char* p, std::size_t bytes) {
    std::uint64_t u = 0;
    for (std::size_t i = 0; i < bytes; ++i) u |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return u;
}

float decode_f32(const unsigned char* p) {
    const std::uint32_t u = static_cast<std::uint32_t>(decode_le(p, 4));
    float f;
    std::memcpy(&f, &u, 4);
    return f;
}

double decode_f64(const unsigned char* p) {
    const std::uint64_t u = decode_le(p, 8);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
}

void encode_le(std::uint64_t u, std::size_t bytes, std::string* out) {
    for (std::size_t i = 0; i < bytes; ++i)
        out->push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

void encode_f32(float f, std::string* out) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    encode_le(u, 4, out);
}

void encode_f64(double d, std::string* out) {
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    encode_le(u, 8, out);
}

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

std::size_t type_size(PlyType t) {
    switch (t) {
        case PlyType::i8:
        case PlyType::u8: return 1;
        case PlyType::i16:
        case PlyType::u16: return 2;
        case PlyType::i32:
        case PlyType::u32:
        case PlyType::f32: return 4;
        case PlyType::f64: return 8;
    }
    return 0;
}

bool parse_type(const std::string& word, PlyType* out) {
    if (word == "char" || word == "int8") *out = PlyType::i8;
    else if (word == "uchar" || word == "uint8") *out = PlyType::u8;
    else if (word == "short" || word == "int16") *out = PlyType::i16;
    else if (word == "ushort" || word == "uint16") *out = PlyType::u16;
    else if (word == "int" || word == "int32") *out = PlyType::i32;
    else if (word == "uint" || word == "uint32") *out = PlyType::u32;
    else if (word == "float" || word == "float32") *out = PlyType::f32;
    else if (word == "double" || word == "float64") *out = PlyType::f64;
    else return false;
    return true;
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::f32;
    bool is_list = false;
    PlyType count_type = PlyType::u8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::size_t header_line = 0;
    std::vector<PlyProperty> properties;
};

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    throw ParseError("line " + std::to_string(line) + ": " + what);
}

// Whitespace tokenizer over the data section that remembers which line each
// token started on, so ASCII errors can name their location.
struct Tokenizer {
    const std::string& text;
    std::size_t pos;
    std::size_t line;

    bool next(std::string* token) {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            if (text[pos] == '\n') ++line;
            ++pos;
        }
        if (pos >= text.size()) return false;
        const std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        *token = text.substr(start, pos - start);
        return true;
    }
};

double token_as_double(Tokenizer& tok, const std::string& context) {
    std::string word;
    const std::size_t line = tok.line;
    if (!tok.next(&word)) parse_fail(tok.line, "unexpected end of data in " + context);
    char* end = nullptr;
    const double value = std::strtod(word.c_str(), &end);
    if (end != word.c_str() + word.size())
        parse_fail(line, "expected a number in " + context + ", found '" + word + "'");
    return value;
}

std::uint64_t binary_scalar(const std::string& bytes, std::size_t* offset, PlyType type,
                            const std::string& element) {
    const std::size_t need = type_size(type);
    if (bytes.size() - *offset < need)
        throw ParseError("binary payload truncated in element '" + element + "': expected " +
                         std::to_string(need) + " more bytes, have " +
                         std::to_string(bytes.size() - *offset));
    const std::uint64_t raw =
        decode_le(reinterpret_cast<const unsigned char*>(bytes.data()) + *offset, need);
    *offset += need;
    return raw;
}

double binary_number(const std::string& bytes, std::size_t* offset, PlyType type,
                     const std::string& element) {
    const std::size_t at = *offset;
    const std::uint64_t raw = binary_scalar(bytes, offset, type, element);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + at;
    switch (type) {
        case PlyType::f32: return decode_f32(p);
        case PlyType::f64: return decode_f64(p);
        case PlyType::i8: return static_cast<double>(static_cast<std::int8_t>(raw));
        case PlyType::i16: return static_cast<double>(static_cast<std::int16_t>(raw));
        case PlyType::i32: return static_cast<double>(static_cast<std::int32_t>(raw));
        default: return static_cast<double>(raw);
    }
}

} // namespace

PointCloud load_ply(const std::string& path) {
    const std::string bytes = read_file(path);

    std::size_t pos = 0;
    std::size_t line_no = 0;
    const auto next_line = [&](std::string* line) {
        if (pos >= bytes.size()) return false;
        const std::size_t nl = bytes.find('\n', pos);
        const std::size_t end = nl == std::string::npos ? bytes.size() : nl;
        *line = bytes.substr(pos, end - pos);
        if (!line->empty() && line->back() == '\r') line->pop_back();
        pos = end == bytes.size() ? end : end + 1;
        ++line_no;
        return true;
    };

    std::string line;
    if (!next_line(&line) || line != "ply") parse_fail(1, "expected 'ply' magic");

    bool is_binary = false;
    bool format_seen = false;
    bool header_done = false;
    std::vector<PlyElement> elements;
    while (next_line(&line)) {
        std::istringstream words(line);
        std::string keyword;
        words >> keyword;
        if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
        if (keyword == "format") {
            std::string fmt;
            words >> fmt;
            if (fmt == "ascii") is_binary = false;
            else if (fmt == "binary_little_endian") is_binary = true;
            else if (fmt == "binary_big_endian")
                throw UnsupportedFormatError("big-endian PLY is not supported: " + path);
            else parse_fail(line_no, "unknown format '" + fmt + "'");
            format_seen = true;
        } else if (keyword == "element") {
            PlyElement element;
            element.header_line = line_no;
            long long count = -1;
            words >> element.name >> count;
            if (element.name.empty() || count < 0)
                parse_fail(line_no, "malformed element declaration");
            element.count = static_cast<std::size_t>(count);
            elements.push_back(std::move(element));
        } else if (keyword == "property") {
            if (elements.empty()) parse_fail(line_no, "property before any element");
            PlyProperty property;
            std::string first;
            words >> first;
            if (first == "list") {
                property.is_list = true;
                std::string count_word, value_word;
                words >> count_word >> value_word >> property.name;
                if (!parse_type(count_word, &property.count_type) ||
                    !parse_type(value_word, &property.type) || property.name.empty())
                    parse_fail(line_no, "malformed list property");
                if (property.count_type == PlyType::f32 || property.count_type == PlyType::f64)
                    parse_fail(line_no, "list count must be an integer type");
            } else {
                if (!parse_type(first, &property.type))
                    parse_fail(line_no, "unknown property type '" + first + "'");
                words >> property.name;
                if (property.name.empty()) parse_fail(line_no, "property without a name");
            }
            elements.back().properties.push_back(std::move(property));
        } else if (keyword == "end_header") {
            header_done = true;
            break;
        } else {
            parse_fail(line_no, "unrecognized header keyword '" + keyword + "'");
        }
    }
    if (!header_done) parse_fail(line_no, "header ended without end_header");
    if (!format_seen) parse_fail(line_no, "header has no format declaration");

    const PlyElement* vertex = nullptr;
    for (const PlyElement& element : elements)
        if (element.name == "vertex") vertex = &element;
    if (vertex == nullptr) parse_fail(line_no, "no vertex element declared");
    int coord_slot[3] = {-1, -1, -1};
    for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
        const PlyProperty& property = vertex->properties[i];
        if (property.is_list) continue;
        if (property.type != PlyType::f32 && property.type != PlyType::f64) continue;
        if (property.name == "x") coord_slot[0] = static_cast<int>(i);
        if (property.name == "y") coord_slot[1] = static_cast<int>(i);
        if (property.name == "z") coord_slot[2] = static_cast<int>(i);
    }
    if (coord_slot[0] < 0 || coord_slot[1] < 0 || coord_slot[2] < 0)
        parse_fail(vertex->header_line, "vertex element lacks float x, y, z properties");

    PointCloud cloud;
    cloud.points.reserve(vertex->count);

    if (is_binary) {
        const std::string payload = bytes.substr(pos);
        // With no list properties the total size is known up front, which
        // lets a truncation error name both counts exactly.
        bool fixed = true;
        std::size_t expected = 0;
        for (const PlyElement& element : elements) {
            std::size_t row = 0;
            for (const PlyProperty& property : element.properties) {
                if (property.is_list) fixed = false;
                row += type_size(property.type);
            }
            expected += element.count * row;
        }
        if (fixed && payload.size() < expected)
            throw ParseError("binary payload truncated: expected " + std::to_string(expected) +
                             " bytes, have " + std::to_string(payload.size()));

        std::size_t offset = 0;
        for (const PlyElement& element : elements) {
            const bool is_vertex = &element == vertex;
            for (std::size_t r = 0; r < element.count; ++r) {
                Vec3 p{0.0, 0.0, 0.0};
                for (std::size_t c = 0; c < element.properties.size(); ++c) {
                    const PlyProperty& property = element.properties[c];
                    if (property.is_list) {
                        const std::uint64_t n =
                            binary_scalar(payload, &offset, property.count_type, element.name);
                        for (std::uint64_t i = 0; i < n; ++i)
                            binary_scalar(payload, &offset, property.type, element.name);
                        continue;
                    }
                    const double value = binary_number(payload, &offset, property.type,
                                                       element.name);
                    if (is_vertex)
                        for (int axis = 0; axis < 3; ++axis)
                            if (coord_slot[axis] == static_cast<int>(c)) p[axis] = value;
                }
                if (is_vertex) cloud.points.push_back(p);
            }
        }
    } else {
        Tokenizer tok{bytes, pos, line_no + 1};
        for (const PlyElement& element : elements) {
            const bool is_vertex = &element == vertex;
            const std::string context = "element '" + element.name + "'";
            for (std::size_t r = 0; r < element.count; ++r) {
                Vec3 p{0.0, 0.0, 0.0};
                for (std::size_t c = 0; c < element.properties.size(); ++c) {
                    const PlyProperty& property = element.properties[c];
                    if (property.is_list) {
                        const double n = token_as_double(tok, context);
                        if (!(n >= 0.0)) parse_fail(tok.line, "negative list count");
                        for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
                            token_as_double(tok, context);
                        continue;
                    }
                    const double value = token_as_double(tok, context);
                    if (is_vertex)
                        for (int axis = 0; axis < 3; ++axis)
                            if (coord_slot[axis] == static_cast<int>(c)) p[axis] = value;
                }
                if (is_vertex) cloud.points.push_back(p);
            }
        }
    }
    return cloud;
}

void save_ply(const PointCloud& cloud, const std::string& path, PlyFormat format) {
    std::string out;
    out += "ply\n";
    out += format == PlyFormat::ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
    out += "element vertex " + std::to_string(cloud.size()) + "\n";
    out += "property double x\nproperty double y\nproperty double z\n";
    out += "end_header\n";
    if (format == PlyFormat::ascii) {
        char row[128];
        for (const Vec3& p : cloud.points) {
            std::snprintf(row, sizeof(row), "%.17g %.17g %.17g\n", p[0], p[1], p[2]);
            out += row;
        }
    } else {
        out.reserve(out.size() + cloud.size() * 24);
        for (const Vec3& p : cloud.points) {
            encode_f64(p[0], &out);
            encode_f64(p[1], &out);
            encode_f64(p[2], &out);
        }
    }
    write_file(path, out);
}

PointCloud load_kitti_bin(const std::string& path) {
    const std::string bytes = read_file(path);
    if (bytes.empty()) throw ParseError("empty point file: " + path);
    if (bytes.size() % 16 != 0)
        throw ParseError("length " + std::to_string(bytes.size()) +
                         " is not divisible by 16 (x, y, z, reflectance float32 records): " + path);
    PointCloud cloud;
    cloud.points.reserve(bytes.size() / 16);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t offset = 0; offset < bytes.size(); offset += 16)
        cloud.points.push_back({static_cast<double>(decode_f32(p + offset)),
                                static_cast<double>(decode_f32(p + offset + 4)),
                                static_cast<double>(decode_f32(p + offset + 8))});
    return cloud;
}

void save_kitti_bin(const PointCloud& cloud, const std::string& path) {
    std::string out;
    out.reserve(cloud.size() * 16);
    for (const Vec3& p : cloud.points) {
        encode_f32(static_cast<float>(p[0]), &out);
        encode_f32(static_cast<float>(p[1]), &out);
        encode_f32(static_cast<float>(p[2]), &out);
        encode_f32(0.0f, &out);
    }
    write_file(path, out);
}

void save_transform(const RigidTransform& transform, const std::string& path) {
    char row[256];
    std::string out;
    for (int r = 0; r < 3; ++r) {
        std::snprintf(row, sizeof(row), "%.17g %.17g %.17g %.17g\n", transform.rotation(r, 0),
                      transform.rotation(r, 1), transform.rotation(r, 2),
                      transform.translation[static_cast<std::size_t>(r)]);
        out += row;
    }
    out += "0 0 0 1\n";
    write_file(path, out);
}

RigidTransform load_transform(const std::string& path) {
    const std::string bytes = read_file(path);
    Tokenizer tok{bytes, 0, 1};
    double values[16];
    for (double& value : values) value = token_as_double(tok, "transform matrix");
    std::string extra;
    if (tok.next(&extra)) throw ParseError("transform file has trailing content: " + path);
    if (values[12] != 0.0 || values[13] != 0.0 || values[14] != 0.0 || values[15] != 1.0)
        throw ParseError("transform file last row must be 0 0 0 1: " + path);
    RigidTransform transform;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) transform.rotation(r, c) = values[r * 4 + c];
        transform.translation[static_cast<std::size_t>(r)] = values[r * 4 + 3];
    }
    try {
        transform.rotation.validate();
    } catch (const ParameterError& e) {
        throw ParseError("transform file rotation block is not a rotation: " +
                         std::string(e.what()));
    }
    return transform;
}

void write_text_atomic(const std::string& path, const std::string& bytes) {
    write_file(path, bytes);
}

} // namespace mdreg
