#include "amli/mmio.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "amli/errors.hpp"
#include "amli/reports.hpp"

namespace amli {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

CsrMatrix read_matrix_market(const std::string& path, bool require_symmetric) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty matrix file: " + path);

  bool symmetric_storage = false;
  {
    std::istringstream hdr(lower(line));
    std::string banner, object, format, field, symmetry;
    hdr >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%matrixmarket")
      throw ConfigError(path + ": missing MatrixMarket banner");
    if (object != "matrix" || format != "coordinate")
      throw ConfigError(path + ": only coordinate matrices are supported");
    if (field != "real" && field != "integer")
      throw ConfigError(path + ": only real-valued matrices are supported");
    if (symmetry == "symmetric") {
      symmetric_storage = true;
    } else if (symmetry != "general") {
      throw ConfigError(path + ": unsupported symmetry '" + symmetry + "'");
    }
  }

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  int rows = 0, cols = 0;
  long long declared_nnz = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> declared_nnz))
      throw ConfigError(path + ": malformed size line");
  }

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(declared_nnz) * (symmetric_storage ? 2 : 1));
  long long seen = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%') continue;
    std::istringstream row(line);
    int i = 0, j = 0;
    double v = 0.0;
    if (!(row >> i >> j >> v)) throw ConfigError(path + ": malformed entry line");
    --i;
    --j;  // Matrix Market is 1-based
    trip.push_back({i, j, v});
    if (symmetric_storage && i != j) trip.push_back({j, i, v});
    ++seen;
  }
  if (seen != declared_nnz)
    throw ConfigError(path + ": entry count differs from header");

  CsrMatrix a = CsrMatrix::from_triplets(rows, cols, std::move(trip));
  if (require_symmetric && !a.is_symmetric())
    throw ConfigError(path + ": matrix is not numerically symmetric");
  return a;
}

std::vector<double> read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vector file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty vector file: " + path);

  std::vector<double> v;
  if (lower(line).rfind("%%matrixmarket", 0) == 0) {
    std::istringstream hdr(lower(line));
    std::string banner, object, format, field, symmetry;
    hdr >> banner >> object >> format >> field >> symmetry;
    if (format != "array")
      throw ConfigError(path + ": vectors must use array format");
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '%') break;
    int rows = 0, cols = 0;
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols) || cols != 1)
      throw ConfigError(path + ": expected a single-column array");
    v.reserve(rows);
    double x;
    while (in >> x) v.push_back(x);
    if (static_cast<int>(v.size()) != rows)
      throw ConfigError(path + ": array length differs from header");
    return v;
  }

  // plain newline-separated decimals; first line already read
  std::istringstream first(line);
  double x;
  while (first >> x) v.push_back(x);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '%' || line[0] == '#') continue;
    std::istringstream row(line);
    while (row >> x) v.push_back(x);
  }
  if (v.empty()) throw ConfigError(path + ": no values found");
  return v;
}

std::vector<int> read_index_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open index file: " + path);
  std::vector<int> idx;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == '%') continue;
    std::istringstream row(line);
    int i;
    while (row >> i) idx.push_back(i);
  }
  return idx;
}

void write_matrix_market(const std::string& path, const CsrMatrix& a) {
  std::string out = "%%MatrixMarket matrix coordinate real general\n";
  out += std::to_string(a.rows()) + " " + std::to_string(a.cols()) + " " +
         std::to_string(a.nnz()) + "\n";
  for (int r = 0; r < a.rows(); ++r) {
    for (int k = a.row_ptr()[r]; k < a.row_ptr()[r + 1]; ++k) {
      out += std::to_string(r + 1) + " " + std::to_string(a.col_idx()[k] + 1) + " " +
             fmt_double(a.values()[k]) + "\n";
    }
  }
  write_text_file(path, out);
}

}  // namespace amli
