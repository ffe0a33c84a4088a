#include "cdl/matrix_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace cdl {

static_assert(std::endian::native == std::endian::little,
              "matrix files are little endian; big-endian hosts need swaps");
static_assert(sizeof(double) == 8);

namespace {

constexpr char kMagic[4] = {'C', 'D', 'L', 'M'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("truncated matrix file: " + path.string());
  return v;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Matrix& M) {
  if (M.rows() < 0 || M.cols() < 0 || M.rows() > 0xffffffffll ||
      M.cols() > 0xffffffffll)
    throw DimensionError("write_matrix: dimensions exceed the u32 header");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, std::uint32_t(M.rows()));
  put(out, std::uint32_t(M.cols()));
  // Eigen's default layout is already column-major
  out.write(reinterpret_cast<const char*>(M.data()),
            std::streamsize(sizeof(double) * std::size_t(M.size())));
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open matrix file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("not a matrix file (bad magic): " + path.string());
  const auto version = get<std::uint16_t>(in, path);
  if (version != kVersion)
    throw IoError("unsupported matrix file version " + std::to_string(version) +
                  ": " + path.string());
  const auto rows = get<std::uint32_t>(in, path);
  const auto cols = get<std::uint32_t>(in, path);
  Matrix M(static_cast<Index>(rows), static_cast<Index>(cols));
  in.read(reinterpret_cast<char*>(M.data()),
          std::streamsize(sizeof(double) * std::size_t(M.size())));
  if (!in) throw IoError("truncated matrix payload: " + path.string());
  return M;
}

}  // namespace cdl
