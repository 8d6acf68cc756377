#pragma once

// Binary formats, all little-endian:
//
//   BTRI (matrix):  "BTRI" | u32 version=1 | u32 scalar_bytes (4|8) | u64 N | u64 n
//                   | N*n*n scalars of D_1..D_N | (N-1)*n*n scalars of E_1..E_{N-1}
//   BRHS (vectors): "BRHS" | u32 version=1 | u32 scalar_bytes | u64 N | u64 n | u64 m
//                   | N*n*m scalars, block by block
//
// Every block is row-major. D blocks are written in full (both triangles).

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "btchol/block_tridiag.hpp"

namespace btchol {

using AnyBlockTridiag = std::variant<BlockTridiag<float>, BlockTridiag<double>>;
using AnyDense = std::variant<DenseBlock<float>, DenseBlock<double>>;

/// Right-hand side block stack with its block layout.
struct RhsFile {
  std::size_t num_blocks = 0;
  std::size_t block_size = 0;
  AnyDense values;
};

namespace io_detail {

inline constexpr std::uint32_t format_version = 1;

template <typename U>
void put(std::ostream& os, U v) {
  static_assert(std::is_unsigned_v<U>);
  unsigned char bytes[sizeof(U)];
  for (std::size_t k = 0; k < sizeof(U); ++k)
    bytes[k] = static_cast<unsigned char>((v >> (8 * k)) & 0xffu);
  os.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get(std::istream& is) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U)))
    throw FormatError("unexpected end of file");
  U v = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k)
    v |= static_cast<U>(bytes[k]) << (8 * k);
  return v;
}

template <Scalar T>
void put_scalar(std::ostream& os, T v) {
  if constexpr (std::is_same_v<T, float>)
    put(os, std::bit_cast<std::uint32_t>(v));
  else
    put(os, std::bit_cast<std::uint64_t>(v));
}

template <Scalar T>
T get_scalar(std::istream& is) {
  if constexpr (std::is_same_v<T, float>)
    return std::bit_cast<float>(get<std::uint32_t>(is));
  else
    return std::bit_cast<double>(get<std::uint64_t>(is));
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char got[4];
  if (!is.read(got, 4) || std::memcmp(got, magic, 4) != 0)
    throw FormatError(std::string("bad magic, expected ") + magic);
  if (get<std::uint32_t>(is) != format_version)
    throw FormatError("unsupported format version");
}

template <Scalar T>
void write_block(std::ostream& os, const DenseBlock<T>& b) {
  for (T v : b.data())
    put_scalar(os, v);
}

template <Scalar T>
DenseBlock<T> read_block(std::istream& is, std::size_t rows, std::size_t cols) {
  DenseBlock<T> b(rows, cols);
  for (auto& v : b.data())
    v = get_scalar<T>(is);
  return b;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw FormatError("cannot open " + path);
  return is;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os)
    throw FormatError("cannot create " + path);
  return os;
}

} // namespace io_detail

template <Scalar T>
void write_btri(std::ostream& os, const BlockTridiag<T>& m) {
  using namespace io_detail;
  os.write("BTRI", 4);
  put<std::uint32_t>(os, format_version);
  put<std::uint32_t>(os, sizeof(T));
  put<std::uint64_t>(os, m.num_blocks());
  put<std::uint64_t>(os, m.block_size());
  for (const auto& d : m.diag_blocks()) {
    // stored full so readers need no symmetry convention
    DenseBlock<T> full = d;
    for (std::size_t r = 0; r < full.rows(); ++r)
      for (std::size_t c = r + 1; c < full.cols(); ++c)
        full(r, c) = full(c, r);
    write_block(os, full);
  }
  for (const auto& e : m.offdiag_blocks())
    write_block(os, e);
}

inline AnyBlockTridiag read_btri(std::istream& is) {
  using namespace io_detail;
  expect_magic(is, "BTRI");
  const auto bytes = get<std::uint32_t>(is);
  const auto N = get<std::uint64_t>(is);
  const auto n = get<std::uint64_t>(is);
  if (N == 0 || n == 0)
    throw FormatError("BTRI: N and n must be positive");
  auto load = [&]<Scalar T>(T) -> AnyBlockTridiag {
    std::vector<DenseBlock<T>> d, e;
    for (std::uint64_t i = 0; i < N; ++i)
      d.push_back(read_block<T>(is, n, n));
    for (std::uint64_t i = 0; i + 1 < N; ++i)
      e.push_back(read_block<T>(is, n, n));
    return BlockTridiag<T>(n, std::move(d), std::move(e));
  };
  if (bytes == 4)
    return load(float{});
  if (bytes == 8)
    return load(double{});
  throw FormatError("BTRI: unknown precision tag " + std::to_string(bytes));
}

template <Scalar T>
void save_btri(const std::string& path, const BlockTridiag<T>& m) {
  auto os = io_detail::open_out(path);
  write_btri(os, m);
  if (!os)
    throw FormatError("write failed: " + path);
}

inline AnyBlockTridiag load_btri(const std::string& path) {
  auto is = io_detail::open_in(path);
  return read_btri(is);
}

template <Scalar T>
void write_brhs(std::ostream& os, const DenseBlock<T>& x, std::size_t num_blocks,
                std::size_t block_size) {
  using namespace io_detail;
  if (x.rows() != num_blocks * block_size)
    throw ShapeMismatch("write_brhs: row count does not match N*n");
  os.write("BRHS", 4);
  put<std::uint32_t>(os, format_version);
  put<std::uint32_t>(os, sizeof(T));
  put<std::uint64_t>(os, num_blocks);
  put<std::uint64_t>(os, block_size);
  put<std::uint64_t>(os, x.cols());
  write_block(os, x); // row-major Nn x m is block-by-block row-major
}

inline RhsFile read_brhs(std::istream& is) {
  using namespace io_detail;
  expect_magic(is, "BRHS");
  const auto bytes = get<std::uint32_t>(is);
  RhsFile f;
  f.num_blocks = get<std::uint64_t>(is);
  f.block_size = get<std::uint64_t>(is);
  const auto m = get<std::uint64_t>(is);
  const std::size_t rows = f.num_blocks * f.block_size;
  if (bytes == 4)
    f.values = read_block<float>(is, rows, m);
  else if (bytes == 8)
    f.values = read_block<double>(is, rows, m);
  else
    throw FormatError("BRHS: unknown precision tag " + std::to_string(bytes));
  return f;
}

template <Scalar T>
void save_brhs(const std::string& path, const DenseBlock<T>& x, std::size_t num_blocks,
               std::size_t block_size) {
  auto os = io_detail::open_out(path);
  write_brhs(os, x, num_blocks, block_size);
  if (!os)
    throw FormatError("write failed: " + path);
}

inline RhsFile load_brhs(const std::string& path) {
  auto is = io_detail::open_in(path);
  return read_brhs(is);
}

} // namespace btchol
