#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gse/csv.hpp"
#include "gse/errors.hpp"
#include "gse/manifolds.hpp"
#include "gse/model.hpp"
#include "gse/model_io.hpp"
#include "support.hpp"

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

using namespace gse;
namespace fs = std::filesystem;

namespace {

/// Unique scratch directory, removed on destruction.
struct TempDir {
  fs::path root;
  TempDir() {
    root = fs::temp_directory_path() /
           ("gse_io_" + std::to_string(std::uint64_t(::getpid())) + "_" +
            std::to_string(counter()++));
    fs::create_directories(root);
  }
  ~TempDir() { fs::remove_all(root); }
  std::string file(const char* name) const { return (root / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

bool bits_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

GseModel fit_small(Variant variant) {
  auto m = make_manifold(variant == Variant::Ogse ? "SwissRoll" : "AffinePlane");
  PointCloud cloud = sample(*m, variant == Variant::Ogse ? 200 : 150, 23);
  HyperParams hp;
  hp.q = 2;
  hp.variant = variant;
  return GseModel::fit(cloud.points, hp.resolved(cloud.points));
}

}  // namespace

TEST_CASE("csv values survive a write-read round trip bit for bit") {
  TempDir dir;
  Matrix data(3, 4);
  data << 1.0 / 3.0, 3.141592653589793, 1e-300, 6.02214076e23,
      -0.0, 5e-324, 1.7976931348623157e308, -123456.78901234567,
      2.220446049250313e-16, -1.0, 0.1, 98765432109876543.0;
  std::string path = dir.file("round.csv");
  csv::write(path, {"a", "b", "c", "d"}, data);
  csv::Table t = csv::read(path);
  REQUIRE(t.header == std::vector<std::string>({"a", "b", "c", "d"}));
  REQUIRE(t.data.rows() == 3);
  REQUIRE(t.data.cols() == 4);
  for (Index r = 0; r < 3; ++r)
    for (Index c = 0; c < 4; ++c) CHECK(bits_equal(t.data(r, c), data(r, c)));
}

TEST_CASE("csv formatting is shortest-form") {
  CHECK(csv::format(0.5) == "0.5");
  CHECK(csv::format(1.0) == "1");
  CHECK(csv::format(-2.0) == "-2");
}

TEST_CASE("csv write validates the header width") {
  TempDir dir;
  CHECK_THROWS_AS(csv::write(dir.file("bad.csv"), {"a", "b"}, Matrix::Zero(2, 3)),
                  DimensionMismatch);
}

TEST_CASE("csv read reports malformed input precisely") {
  TempDir dir;
  CHECK_THROWS_AS(csv::read(dir.file("missing.csv")), IoError);

  std::string empty = dir.file("empty.csv");
  spit(empty, "");
  CHECK_THROWS_AS(csv::read(empty), IoError);

  std::string ragged = dir.file("ragged.csv");
  spit(ragged, "a,b\n1,2\n3\n");
  CHECK_THROWS_WITH_AS(csv::read(ragged), doctest::Contains("row 3"), IoError);

  std::string garbage = dir.file("garbage.csv");
  spit(garbage, "a,b\n1,zebra\n");
  CHECK_THROWS_AS(csv::read(garbage), IoError);
}

TEST_CASE("csv tables resolve named and prefixed columns") {
  TempDir dir;
  Matrix data(2, 4);
  data << 1, 2, 3, 4, 5, 6, 7, 8;
  std::string path = dir.file("cols.csv");
  csv::write(path, {"x1", "x2", "t", "x3"}, data);
  csv::Table t = csv::read(path);
  CHECK(t.column("t") == 2);
  CHECK(t.column("nope") == -1);
  std::vector<Index> xs = t.prefixed_columns("x");
  REQUIRE(xs.size() == 3);
  CHECK(xs[0] == 0);
  CHECK(xs[1] == 1);
  CHECK(xs[2] == 3);
}

TEST_CASE("saved models answer queries bit-identically after loading") {
  for (Variant variant : {Variant::Gse, Variant::Ogse}) {
    CAPTURE(to_string(variant));
    TempDir dir;
    GseModel model = fit_small(variant);
    std::string path = dir.file("model.bin");
    save_model(model, path, 99, 0xdeadbeefULL);

    ModelProvenance prov;
    GseModel loaded = load_model(path, &prov);
    CHECK(prov.version == 1);
    CHECK(prov.seed == 99);
    CHECK(prov.config_hash == 0xdeadbeefULL);

    CHECK(loaded.sample_embeddings() == model.sample_embeddings());
    CHECK(loaded.h_set() == model.h_set());
    CHECK(loaded.params().eps1 == model.params().eps1);
    CHECK(loaded.summary().delta_h == model.summary().delta_h);
    CHECK(loaded.summary().delta_v == model.summary().delta_v);

    // probe queries must agree to the last bit, embeddings and ambients both
    Rng rng(5);
    const Matrix& pts = model.sample_points();
    for (int trial = 0; trial < 8; ++trial) {
      Index i = Index(rng.next_u64() % std::uint64_t(pts.rows()));
      Vector x = pts.row(i).transpose();
      Vector y1 = model.embed(x);
      Vector y2 = loaded.embed(x);
      REQUIRE(y1.size() == y2.size());
      for (Index k = 0; k < y1.size(); ++k) CHECK(bits_equal(y1(k), y2(k)));
      Vector r1 = model.reconstruct(y1);
      Vector r2 = loaded.reconstruct(y2);
      for (Index k = 0; k < r1.size(); ++k) CHECK(bits_equal(r1(k), r2(k)));
    }
  }
}

TEST_CASE("model files reject corruption with specific messages") {
  TempDir dir;
  GseModel model = fit_small(Variant::Gse);
  std::string good = dir.file("model.bin");
  save_model(model, good);
  std::string bytes = slurp(good);
  REQUIRE(bytes.size() > 64);

  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    std::string path = dir.file("magic.bin");
    spit(path, bad);
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("bad magic"), IoError);
  }
  SUBCASE("unsupported version") {
    std::string bad = bytes;
    bad[8] = 99;  // little-endian version field
    std::string path = dir.file("version.bin");
    spit(path, bad);
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("unsupported model version"),
                         IoError);
  }
  SUBCASE("foreign byte order") {
    std::string bad = bytes;
    bad[12] = char(0xff);  // byte-order marker
    std::string path = dir.file("endian.bin");
    spit(path, bad);
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("byte order"), IoError);
  }
  SUBCASE("truncation") {
    std::string path = dir.file("short.bin");
    spit(path, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("truncated"), IoError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_model(dir.file("nope.bin")), doctest::Contains("cannot open"),
                         IoError);
  }
}
