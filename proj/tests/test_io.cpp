#include "doctest.h"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "mdreg/errors.hpp"
#include "mdreg/io.hpp"
#include "mdreg/rng.hpp"
#include "support.hpp"

using namespace mdreg;
using namespace testsupport;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("mdreg_io_" + name);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

PointCloud random_cloud(Rng& rng, std::size_t n) {
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i)
        cloud.points.push_back(
            {rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0), rng.uniform(-50.0, 50.0)});
    return cloud;
}

struct Cleanup {
    std::filesystem::path path;
    ~Cleanup() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

} // namespace

TEST_SUITE("io") {

TEST_CASE("hand written ascii ply parses exact coordinates") {
    const auto path = temp_path("three.ply");
    Cleanup cleanup{path};
    write_text(path,
               "ply\n"
               "format ascii 1.0\n"
               "comment made by hand\n"
               "element vertex 3\n"
               "property float x\n"
               "property float y\n"
               "property float z\n"
               "property uchar red\n"
               "end_header\n"
               "1 2 3 255\n"
               "-0.5 0.25 0.125 0\n"
               "10 -20 30 7\n");
    const PointCloud cloud = load_ply(path.string());
    REQUIRE(cloud.size() == 3);
    CHECK(cloud.points[0] == Vec3{1.0, 2.0, 3.0});
    CHECK(cloud.points[1] == Vec3{-0.5, 0.25, 0.125});
    CHECK(cloud.points[2] == Vec3{10.0, -20.0, 30.0});
}

TEST_CASE("interleaved extra properties and later elements are skipped") {
    const auto path = temp_path("faces.ply");
    Cleanup cleanup{path};
    write_text(path,
               "ply\n"
               "format ascii 1.0\n"
               "element vertex 2\n"
               "property float x\n"
               "property int intensity\n"
               "property float y\n"
               "property float z\n"
               "element face 2\n"
               "property list uchar int vertex_indices\n"
               "end_header\n"
               "1 99 2 3\n"
               "4 -5 5 6\n"
               "3 0 1 0\n"
               "4 0 1 0 1\n");
    const PointCloud cloud = load_ply(path.string());
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.points[0] == Vec3{1.0, 2.0, 3.0});
    CHECK(cloud.points[1] == Vec3{4.0, 5.0, 6.0});
}

TEST_CASE("binary round trip is bitwise stable") {
    Rng rng(11000);
    const PointCloud cloud = random_cloud(rng, 257);
    const auto path = temp_path("roundtrip.ply");
    Cleanup cleanup{path};
    save_ply(cloud, path.string(), PlyFormat::binary_little_endian);
    const PointCloud back = load_ply(path.string());
    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (int c = 0; c < 3; ++c) CHECK(back.points[i][c] == cloud.points[i][c]);

    // Seventeen significant digits reparse exactly too.
    const auto ascii_path = temp_path("roundtrip_ascii.ply");
    Cleanup ascii_cleanup{ascii_path};
    save_ply(cloud, ascii_path.string(), PlyFormat::ascii);
    const PointCloud ascii_back = load_ply(ascii_path.string());
    REQUIRE(ascii_back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (int c = 0; c < 3; ++c) CHECK(ascii_back.points[i][c] == cloud.points[i][c]);
}

TEST_CASE("truncated binary payload names expected and actual byte counts") {
    Rng rng(11001);
    const PointCloud cloud = random_cloud(rng, 10);
    const auto path = temp_path("truncated.ply");
    Cleanup cleanup{path};
    save_ply(cloud, path.string(), PlyFormat::binary_little_endian);
    // Chop the last point and a half off the payload.
    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size - 36);
    try {
        load_ply(path.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("truncated") != std::string::npos);
        CHECK(msg.find("240") != std::string::npos); // expected payload bytes: 10 * 24
        CHECK(msg.find("204") != std::string::npos); // what is left after the chop
    }
}

TEST_CASE("malformed headers fail with their line number") {
    const auto path = temp_path("badheader.ply");
    Cleanup cleanup{path};
    write_text(path,
               "ply\n"
               "format ascii 1.0\n"
               "element vertex 1\n"
               "property float x\n"
               "property float y\n"
               "property float z\n"
               "end_headr\n"
               "1 2 3\n");
    try {
        load_ply(path.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }

    write_text(path, "not a ply\n");
    try {
        load_ply(path.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }

    write_text(path,
               "ply\n"
               "format ascii 1.0\n"
               "element vertex 1\n"
               "property float x\n"
               "property float y\n"
               "end_header\n"
               "1 2\n");
    CHECK_THROWS_AS(load_ply(path.string()), ParseError); // no z property

    CHECK_THROWS_AS(load_ply(temp_path("missing_file.ply").string()), IoError);
}

TEST_CASE("big endian ply is rejected as unsupported") {
    const auto path = temp_path("bigendian.ply");
    Cleanup cleanup{path};
    write_text(path,
               "ply\n"
               "format binary_big_endian 1.0\n"
               "element vertex 0\n"
               "property float x\n"
               "property float y\n"
               "property float z\n"
               "end_header\n");
    CHECK_THROWS_AS(load_ply(path.string()), UnsupportedFormatError);
}

TEST_CASE("ascii data errors carry the data line number") {
    const auto path = temp_path("baddata.ply");
    Cleanup cleanup{path};
    write_text(path,
               "ply\n"
               "format ascii 1.0\n"
               "element vertex 2\n"
               "property float x\n"
               "property float y\n"
               "property float z\n"
               "end_header\n"
               "1 2 3\n"
               "4 oops 6\n");
    try {
        load_ply(path.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 9") != std::string::npos);
        CHECK(msg.find("oops") != std::string::npos);
    }
}

TEST_CASE("handcrafted kitti file loads and drops reflectance") {
    const auto path = temp_path("two.bin");
    Cleanup cleanup{path};
    // Two records of four float32 values each, little endian.
    const float values[8] = {1.5f, -2.0f, 3.25f, 0.9f, -4.0f, 5.5f, -6.75f, 0.1f};
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(values), sizeof(values));
    out.close();
    const PointCloud cloud = load_kitti_bin(path.string());
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.points[0] == Vec3{1.5, -2.0, 3.25});
    CHECK(cloud.points[1] == Vec3{-4.0, 5.5, -6.75});
}

TEST_CASE("kitti rejects empty and misaligned files") {
    const auto path = temp_path("empty.bin");
    Cleanup cleanup{path};
    write_text(path, "");
    CHECK_THROWS_AS(load_kitti_bin(path.string()), ParseError);
    write_text(path, "0123456789abcdefX"); // 17 bytes
    try {
        load_kitti_bin(path.string());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
}

TEST_CASE("kitti round trip is exact to float32 rounding") {
    Rng rng(11002);
    const PointCloud cloud = random_cloud(rng, 100);
    const auto path = temp_path("roundtrip.bin");
    Cleanup cleanup{path};
    save_kitti_bin(cloud, path.string());
    const PointCloud back = load_kitti_bin(path.string());
    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(back.points[i][c] ==
                  static_cast<double>(static_cast<float>(cloud.points[i][c])));
}

TEST_CASE("transform file round trips bitwise and validates") {
    Rng rng(11003);
    RigidTransform transform;
    transform.rotation = random_rotation(rng, 3.0);
    transform.translation = {rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0),
                             rng.uniform(-5.0, 5.0)};
    const auto path = temp_path("pose.txt");
    Cleanup cleanup{path};
    save_transform(transform, path.string());
    const RigidTransform back = load_transform(path.string());
    for (int i = 0; i < 9; ++i) CHECK(back.rotation.m[i] == transform.rotation.m[i]);
    for (int c = 0; c < 3; ++c) CHECK(back.translation[c] == transform.translation[c]);

    write_text(path, "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 2\n");
    CHECK_THROWS_AS(load_transform(path.string()), ParseError);
    write_text(path, "2 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"); // not a rotation
    CHECK_THROWS_AS(load_transform(path.string()), ParseError);
    CHECK_THROWS_AS(load_transform(temp_path("missing_pose.txt").string()), IoError);
}

} // TEST_SUITE
