#include "l1roc/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "l1roc/errors.hpp"

namespace l1roc {

static_assert(std::endian::native == std::endian::little, "matrix files assume a little-endian host");

namespace {

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError(path.string() + ": truncated header");
  return v;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMatrixMagic, sizeof kMatrixMagic);
  put<std::uint32_t>(os, kMatrixVersion);
  put<std::uint32_t>(os, 0);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  os.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * rm.size()));
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMatrixMagic, 8) != 0)
    throw FormatError(path.string() + ": not a matrix file (bad magic)");
  const auto version = get<std::uint32_t>(is, path);
  if (version != kMatrixVersion)
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  get<std::uint32_t>(is, path);
  const auto rows = get<std::uint64_t>(is, path);
  const auto cols = get<std::uint64_t>(is, path);
  if (rows > (1ull << 40) || cols > (1ull << 40) || (rows && cols > (1ull << 40) / rows))
    throw FormatError(path.string() + ": implausible dimensions");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Eigen::Index>(rows),
                                                                             static_cast<Eigen::Index>(cols));
  const auto bytes = static_cast<std::streamsize>(sizeof(double) * rows * cols);
  if (!is.read(reinterpret_cast<char*>(rm.data()), bytes)) throw FormatError(path.string() + ": truncated data");
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes");
  return rm;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace l1roc
