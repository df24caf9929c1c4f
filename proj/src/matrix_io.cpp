#include "mlc/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "mlc/errors.hpp"

namespace mlc::io {
namespace {

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) throw FormatError("truncated matrix header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  out.write(kMatrixMagic, sizeof(kMatrixMagic));
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
    }
  }
  if (!out) throw FormatError("failed writing matrix");
}

DenseMatrix read_matrix(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMatrixMagic, 8) != 0) {
    throw FormatError("bad matrix magic (expected MLCMAT01)");
  }
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  if (rows > (1u << 28) || cols > (1u << 28) || rows * cols > (std::uint64_t{1} << 32)) {
    throw FormatError("implausible matrix dimensions");
  }
  DenseMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      m(i, j) = std::bit_cast<double>(get_u64(in));
    }
  }
  return m;
}

void save_matrix(const std::filesystem::path& path, const DenseMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_matrix(out, m);
}

DenseMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_matrix(in);
}

void save_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (int y : labels) out << y << '\n';
}

std::vector<int> load_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    int y = 0;
    std::string rest;
    if (!(ss >> y) || (ss >> rest)) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected one integer");
    }
    labels.push_back(y);
  }
  return labels;
}

}  // namespace mlc::io
