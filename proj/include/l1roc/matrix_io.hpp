#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Core>

namespace l1roc {

/// Binary dense matrix file:
///   bytes 0-7    magic "L1ROCMAT"
///   bytes 8-11   uint32 format version (1)
///   bytes 12-15  uint32 reserved, zero
///   bytes 16-23  uint64 rows
///   bytes 24-31  uint64 cols
///   then rows*cols float64 values in row-major order.
/// All integers and floats are little-endian.
inline constexpr char kMatrixMagic[8] = {'L', '1', 'R', 'O', 'C', 'M', 'A', 'T'};
inline constexpr std::uint32_t kMatrixVersion = 1;

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

/// Writes `text` to `path`, replacing any existing file.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace l1roc
