#pragma once

#include <filesystem>

#include "cdl/common.hpp"

namespace cdl {

// Binary matrix file: magic "CDLM", u16 version (= 1), u32 rows, u32 cols
// (little endian), then rows*cols f64 values in column-major order.
// Round-trips are bit-exact, including signed zeros and subnormals.
void write_matrix(const std::filesystem::path& path, const Matrix& M);
Matrix read_matrix(const std::filesystem::path& path);

}  // namespace cdl
