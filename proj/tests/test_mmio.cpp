#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <unistd.h>

#include "amli/errors.hpp"
#include "amli/mmio.hpp"
#include "amli/reports.hpp"

using namespace amli;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("amli_mmio_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("symmetric coordinate files expand, reorder and deduplicate") {
  TempDir td;
  // lower triangle of tridiag(-1, 2, -1), deliberately unordered, with a
  // duplicate entry that must sum
  write_text_file(td.file("a.mtx"),
                  "%%MatrixMarket matrix coordinate real symmetric\n"
                  "% comment line\n"
                  "3 3 5\n"
                  "3 2 -1.0\n"
                  "1 1 2.0\n"
                  "2 2 2.0\n"
                  "2 1 -1.0\n"
                  "3 3 2.0\n");
  CsrMatrix a = read_matrix_market(td.file("a.mtx"));
  CHECK(a.rows() == 3);
  CHECK(a.nnz() == 7);
  CHECK(a.at(0, 1) == -1.0);
  CHECK(a.at(1, 0) == -1.0);
  CHECK(a.at(2, 1) == -1.0);
  CHECK(a.at(0, 0) == 2.0);
  CHECK(a.is_symmetric());

  write_text_file(td.file("dup.mtx"),
                  "%%MatrixMarket matrix coordinate real general\n"
                  "2 2 4\n"
                  "1 1 1.5\n"
                  "1 1 0.5\n"
                  "2 2 1.0\n"
                  "1 2 0.0\n");
  CsrMatrix d = read_matrix_market(td.file("dup.mtx"), false);
  CHECK(d.at(0, 0) == 2.0);
}

TEST_CASE("asymmetric input is rejected when symmetry is required") {
  TempDir td;
  write_text_file(td.file("bad.mtx"),
                  "%%MatrixMarket matrix coordinate real general\n"
                  "2 2 3\n"
                  "1 1 1.0\n"
                  "1 2 0.5\n"
                  "2 2 1.0\n");
  CHECK_THROWS_AS(read_matrix_market(td.file("bad.mtx")), ConfigError);
  CHECK_NOTHROW(read_matrix_market(td.file("bad.mtx"), false));
}

TEST_CASE("malformed headers and counts are reported") {
  TempDir td;
  write_text_file(td.file("h.mtx"), "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
  CHECK_THROWS_AS(read_matrix_market(td.file("h.mtx")), ConfigError);

  write_text_file(td.file("c.mtx"),
                  "%%MatrixMarket matrix coordinate real general\n"
                  "2 2 3\n"
                  "1 1 1.0\n");
  CHECK_THROWS_AS(read_matrix_market(td.file("c.mtx")), ConfigError);

  CHECK_THROWS_AS(read_matrix_market(td.file("missing.mtx")), ConfigError);
}

TEST_CASE("vectors load from array files and plain decimals") {
  TempDir td;
  write_text_file(td.file("v.mtx"),
                  "%%MatrixMarket matrix array real general\n"
                  "% values\n"
                  "3 1\n"
                  "1.5\n"
                  "-2.25\n"
                  "0.125\n");
  auto v = read_vector(td.file("v.mtx"));
  CHECK(v == std::vector<double>{1.5, -2.25, 0.125});

  write_text_file(td.file("plain.txt"), "1.0\n2.0\n# note\n3.5\n");
  auto p = read_vector(td.file("plain.txt"));
  CHECK(p == std::vector<double>{1.0, 2.0, 3.5});

  write_text_file(td.file("wide.mtx"),
                  "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n");
  CHECK_THROWS_AS(read_vector(td.file("wide.mtx")), ConfigError);
}

TEST_CASE("index lists skip comments") {
  TempDir td;
  write_text_file(td.file("idx.txt"), "# coarse set\n1 3\n5\n% more\n7\n");
  CHECK(read_index_list(td.file("idx.txt")) == std::vector<int>{1, 3, 5, 7});
}

TEST_CASE("matrix write/read round trip") {
  TempDir td;
  std::vector<Triplet> t = {{0, 0, 1.25}, {0, 2, -0.5}, {1, 1, 3.0}, {2, 0, -0.5}, {2, 2, 2.0}};
  CsrMatrix a = CsrMatrix::from_triplets(3, 3, t);
  write_matrix_market(td.file("rt.mtx"), a);
  CsrMatrix b = read_matrix_market(td.file("rt.mtx"), false);
  REQUIRE(b.nnz() == a.nnz());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(b.at(i, j) == a.at(i, j));
}
