#ifndef MDREG_IO_HPP
#define MDREG_IO_HPP

#include <string>

#include "mdreg/point_cloud.hpp"
#include "mdreg/pose.hpp"

namespace mdreg {

enum class PlyFormat { ascii, binary_little_endian };

// Reads a PLY point cloud: ASCII or binary-little-endian, element vertex with
// scalar float or double x, y, z. Every other property (scalar or list) and
// every other element is skipped, in ASCII and binary alike. float32 values
// widen to double exactly. Unreadable file: IoError. Malformed header or
// payload: ParseError carrying the offending line number (header, ASCII data)
// or the expected vs available byte counts (binary data).
// binary_big_endian: UnsupportedFormatError.
PointCloud load_ply(const std::string& path);

// Writes vertices as double x, y, z. Binary mode round-trips coordinates
// bitwise; ASCII writes 17 significant digits, which also reparses exactly.
// Output lands via a temp file renamed into place.
void save_ply(const PointCloud& cloud, const std::string& path,
              PlyFormat format = PlyFormat::binary_little_endian);

// Raw little-endian float32 quadruples (x, y, z, reflectance), 16 bytes per
// point; reflectance is dropped. An empty file or a length not divisible by
// 16 is a ParseError.
PointCloud load_kitti_bin(const std::string& path);

// Inverse of load_kitti_bin with reflectance 0. Coordinates pass through
// float32, so a round trip is exact only to float32 rounding.
void save_kitti_bin(const PointCloud& cloud, const std::string& path);

// 4x4 homogeneous transform, row-major, 17 significant digits, one row per
// line; the last row is the literal 0 0 0 1. load checks the layout and that
// the upper-left block is a proper rotation (ParseError otherwise).
void save_transform(const RigidTransform& transform, const std::string& path);
RigidTransform load_transform(const std::string& path);

// Writes bytes through a sibling temp file renamed into place, so readers
// never observe a half-written file. IoError on failure.
void write_text_atomic(const std::string& path, const std::string& bytes);

} // namespace mdreg

#endif
