#pragma once

#include <string>
#include <vector>

#include "amli/sparse.hpp"

namespace amli {

/// Reads a Matrix Market coordinate file (real, general or symmetric).
/// Symmetric storage is expanded to both triangles; entries may be unordered
/// and duplicated (duplicates sum). The result is verified numerically
/// symmetric when `require_symmetric` is set.
CsrMatrix read_matrix_market(const std::string& path, bool require_symmetric = true);

/// Reads a vector, accepting either a Matrix Market array file (single
/// column) or a plain list of newline-separated decimals.
std::vector<double> read_vector(const std::string& path);

/// Reads a list of integer indices, one per line ('#' comments allowed).
std::vector<int> read_index_list(const std::string& path);

void write_matrix_market(const std::string& path, const CsrMatrix& a);

}  // namespace amli
