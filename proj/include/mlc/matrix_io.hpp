#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "mlc/numerics.hpp"

namespace mlc::io {

/// Binary matrix layout: the 8 bytes "MLCMAT01", rows and cols as
/// little-endian uint64, then rows*cols little-endian IEEE-754 doubles in
/// row-major order.
inline constexpr char kMatrixMagic[8] = {'M', 'L', 'C', 'M', 'A', 'T', '0', '1'};

void write_matrix(std::ostream& out, const DenseMatrix& m);
DenseMatrix read_matrix(std::istream& in);

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix load_matrix(const std::filesystem::path& path);

/// Newline-separated integers, one per line.
void save_labels(const std::filesystem::path& path, const std::vector<int>& labels);
std::vector<int> load_labels(const std::filesystem::path& path);

}  // namespace mlc::io
