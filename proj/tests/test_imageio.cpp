#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mctrace/imageio.hpp"
#include "test_support.hpp"

using namespace mctrace;
using testsupport::make_geom;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mctrace_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("binary volume round trip is bit exact") {
    TempDir tmp;
    GridGeometry g = make_geom(4, 3, 2, 0.4, Vec3{1.0, -2.0, 0.5});
    BinaryVolume v(g);
    for (std::size_t i = 0; i < v.data.size(); ++i) v.data[i] = (i * 7) % 3 == 0;
    for (bool local : {false, true}) {
        auto path = tmp.path / (local ? "b_local.mhd" : "b.mhd");
        write_volume(v, path, local);
        auto back = read_binary_volume(path);
        CHECK(back.data == v.data);
        CHECK(back.geom.same_grid(g));
    }
}

TEST_CASE("float32 volume round trip is bit exact") {
    TempDir tmp;
    ScalarVolume v(make_geom(3, 3, 3, 0.7));
    for (std::size_t i = 0; i < v.data.size(); ++i)
        v.data[i] = static_cast<float>(i) * 0.337f - 4.5f;
    v.data[5] = 1.0f / 3.0f;  // non-representable in decimal; must survive anyway
    write_volume(v, tmp.path / "f.mhd");
    auto back = read_scalar_volume(tmp.path / "f.mhd");
    CHECK(back.data == v.data);
}

TEST_CASE("int16 volume round trip is bit exact for integral values") {
    TempDir tmp;
    ScalarVolume v(make_geom(4, 2, 2));
    v.data = {0, 1, -1, 32767, -32768, 100, -1000, 3095, 7, 8, 9, 10, 11, 12, 13, 14};
    write_volume(v, tmp.path / "s.mhd", ElementType::Int16);
    auto back = read_scalar_volume(tmp.path / "s.mhd");
    CHECK(back.data == v.data);
}

TEST_CASE("geometry metadata survives the round trip exactly") {
    TempDir tmp;
    GridGeometry g = make_geom(2, 2, 2);
    g.spacing = Spacing(0.3999999999999999, 0.4, 1.25);
    g.origin = Vec3{-17.125, 0.1, 1e-3};
    BinaryVolume v(g);
    write_volume(v, tmp.path / "g.mhd");
    auto back = read_binary_volume(tmp.path / "g.mhd");
    CHECK(back.geom.spacing.sx == g.spacing.sx);
    CHECK(back.geom.spacing.sy == g.spacing.sy);
    CHECK(back.geom.spacing.sz == g.spacing.sz);
    CHECK(back.geom.origin.x == g.origin.x);
    CHECK(back.geom.origin.y == g.origin.y);
    CHECK(back.geom.origin.z == g.origin.z);
}

TEST_CASE("header writer emits the expected key set") {
    TempDir tmp;
    write_volume(BinaryVolume(make_geom(2, 2, 2)), tmp.path / "h.mhd");
    std::string header = slurp(tmp.path / "h.mhd");
    for (const char* key :
         {"ObjectType = Image", "NDims = 3", "DimSize = 2 2 2", "ElementSpacing", "Offset",
          "ElementType = MET_UCHAR", "ElementByteOrderMSB = False", "ElementDataFile = h.raw"})
        CHECK(header.find(key) != std::string::npos);
    CHECK(fs::exists(tmp.path / "h.raw"));
}

TEST_CASE("payload size mismatch reports expected and actual byte counts") {
    TempDir tmp;
    std::ofstream out(tmp.path / "bad.mhd", std::ios::binary);
    out << "ObjectType = Image\nNDims = 3\nDimSize = 2 2 2\n"
        << "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n";
    out.write("1234567", 7);  // 8 expected
    out.close();
    try {
        read_volume(tmp.path / "bad.mhd");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("expected 8") != std::string::npos);
        CHECK(msg.find("got 7") != std::string::npos);
    }
}

TEST_CASE("unsupported element types are rejected by name") {
    TempDir tmp;
    std::ofstream out(tmp.path / "d.mhd");
    out << "ObjectType = Image\nNDims = 3\nDimSize = 1 1 1\n"
        << "ElementType = MET_DOUBLE\nElementDataFile = LOCAL\n";
    out.close();
    CHECK_THROWS_WITH_AS(read_volume(tmp.path / "d.mhd"),
                         doctest::Contains("MET_DOUBLE"), ParseError);
}

TEST_CASE("non-binary uint8 payloads are rejected with the payload offset") {
    TempDir tmp;
    std::ofstream out(tmp.path / "nb.mhd", std::ios::binary);
    out << "ObjectType = Image\nNDims = 3\nDimSize = 2 1 1\n"
        << "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n";
    char payload[2] = {1, 5};
    out.write(payload, 2);
    out.close();
    CHECK_THROWS_WITH_AS(read_volume(tmp.path / "nb.mhd"), doctest::Contains("offset 1"),
                         ParseError);
}

TEST_CASE("missing required header keys are named") {
    TempDir tmp;
    std::ofstream(tmp.path / "m.mhd") << "ObjectType = Image\nNDims = 3\n"
                                      << "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n";
    CHECK_THROWS_WITH_AS(read_volume(tmp.path / "m.mhd"), doctest::Contains("DimSize"),
                         ParseError);
}

TEST_CASE("NDims other than 3 is rejected") {
    TempDir tmp;
    std::ofstream(tmp.path / "n.mhd") << "ObjectType = Image\nNDims = 2\nDimSize = 1 1 1\n"
                                      << "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n";
    CHECK_THROWS_WITH_AS(read_volume(tmp.path / "n.mhd"), doctest::Contains("NDims"), ParseError);
}

TEST_CASE("missing external raw file is reported with its path") {
    TempDir tmp;
    std::ofstream(tmp.path / "x.mhd") << "ObjectType = Image\nNDims = 3\nDimSize = 1 1 1\n"
                                      << "ElementType = MET_UCHAR\nElementDataFile = gone.raw\n";
    CHECK_THROWS_WITH_AS(read_volume(tmp.path / "x.mhd"), doctest::Contains("gone.raw"),
                         ParseError);
}

TEST_CASE("reading a missing file names the file") {
    CHECK_THROWS_WITH_AS(read_volume("/definitely/not/here.mhd"), doctest::Contains("here.mhd"),
                         ParseError);
}

TEST_CASE("scalar reader accepts a binary file as 0/1 values") {
    TempDir tmp;
    BinaryVolume v(make_geom(2, 1, 1));
    v.data = {1, 0};
    write_volume(v, tmp.path / "b.mhd");
    auto s = read_scalar_volume(tmp.path / "b.mhd");
    CHECK(s.data == std::vector<float>{1.0f, 0.0f});
    CHECK_THROWS_AS(read_binary_volume((tmp.path / "b.mhd").string() + ".nope"), ParseError);
}

TEST_CASE("binary reader rejects scalar files") {
    TempDir tmp;
    write_volume(ScalarVolume(make_geom(1, 1, 1)), tmp.path / "s.mhd");
    CHECK_THROWS_AS(read_binary_volume(tmp.path / "s.mhd"), ParseError);
}

TEST_CASE("control points parse with comments, blank lines, and CRLF") {
    TempDir tmp;
    std::ofstream(tmp.path / "cp.asc")
        << "# header comment\r\n"
        << "1.5 -2.25 3.0\n"
        << "\n"
        << "   4 5 6   \r\n"
        << "7.125 0 -0.5\n";
    auto cps = read_control_points(tmp.path / "cp.asc", CanalSide::Right);
    REQUIRE(cps.points.size() == 3);
    CHECK(cps.side == CanalSide::Right);
    CHECK(cps.points[0].x == 1.5);
    CHECK(cps.points[0].y == -2.25);
    CHECK(cps.points[1].z == 6.0);
    CHECK(cps.points[2].x == 7.125);
}

TEST_CASE("control point errors carry line numbers") {
    TempDir tmp;
    std::ofstream(tmp.path / "bad.asc") << "1 2 3\n4 5\n";
    CHECK_THROWS_WITH_AS(read_control_points(tmp.path / "bad.asc"), doctest::Contains("line 2"),
                         ParseError);
    std::ofstream(tmp.path / "nan.asc") << "1 2 3\n# ok\n1 x 3\n";
    CHECK_THROWS_WITH_AS(read_control_points(tmp.path / "nan.asc"), doctest::Contains("line 3"),
                         ParseError);
}

TEST_CASE("fewer than two control points is an error") {
    TempDir tmp;
    std::ofstream(tmp.path / "one.asc") << "1 2 3\n";
    CHECK_THROWS_AS(read_control_points(tmp.path / "one.asc"), ParseError);
    std::ofstream(tmp.path / "zero.asc") << "# nothing\n";
    CHECK_THROWS_AS(read_control_points(tmp.path / "zero.asc"), ParseError);
}

TEST_CASE("control point write then read preserves coordinates exactly") {
    TempDir tmp;
    std::vector<Vec3> pts{{0.1, 0.2, 0.3}, {-100.5, 1e-7, 12345.6789}};
    write_control_points(pts, tmp.path / "w.asc");
    auto back = read_control_points(tmp.path / "w.asc");
    REQUIRE(back.points.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(back.points[i].x == pts[i].x);
        CHECK(back.points[i].y == pts[i].y);
        CHECK(back.points[i].z == pts[i].z);
    }
}

TEST_CASE("metric report writes all fields with 6 decimals in fixed order") {
    MetricReport r;
    r.precision = 0.5;
    r.recall = 1.0;
    r.f1 = 2.0 / 3.0;
    r.iou_canal = 0.5;
    r.iou_background = 0.999999;
    r.miou = 0.7499995;
    r.mcd_gp_mm = 0.0;
    r.mcd_pg_mm = 1.234567891;
    std::ostringstream out;
    write_report(r, out);
    CHECK(out.str() ==
          "precision 0.500000\n"
          "recall 1.000000\n"
          "f1 0.666667\n"
          "iou_canal 0.500000\n"
          "iou_background 0.999999\n"
          "miou 0.750000\n"
          "mcd_gp_mm 0.000000\n"
          "mcd_pg_mm 1.234568\n");
}

TEST_CASE("metric report appends undefined metric keys on a trailing line") {
    MetricReport r;
    r.precision = r.recall = r.f1 = r.iou_canal = r.iou_background = r.miou = 0.0;
    r.mcd_gp_mm = r.mcd_pg_mm = 0.0;
    r.undefined = {"precision", "f1"};
    std::ostringstream out;
    write_report(r, out);
    CHECK(out.str().find("undefined precision f1\n") != std::string::npos);
}

TEST_CASE("metric report rejects missing fields and names them") {
    MetricReport r;
    r.precision = 1.0;
    std::ostringstream out;
    CHECK_THROWS_WITH_AS(write_report(r, out), doctest::Contains("recall"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(write_report(r, out), doctest::Contains("mcd_pg_mm"),
                         std::invalid_argument);
}

TEST_CASE("report writing is deterministic") {
    MetricReport r;
    r.precision = r.recall = r.f1 = r.iou_canal = r.iou_background = r.miou = 0.123456;
    r.mcd_gp_mm = r.mcd_pg_mm = 0.654321;
    std::ostringstream a, b;
    write_report(r, a);
    write_report(r, b);
    CHECK(a.str() == b.str());
}
