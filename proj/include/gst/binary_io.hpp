#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gst/sparse.hpp"

namespace gst::io {

// Little-endian primitive streams. Readers throw ErrorKind::kIo on truncation.
class Writer {
 public:
  explicit Writer(const std::filesystem::path& path);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void f64s(std::span<const double> v);
  void i64s(std::span<const std::int64_t> v);
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path);
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  void f64s(std::span<double> out);
  std::vector<std::int64_t> i64s(std::size_t n);
  bool at_end();

 private:
  void raw(void* dst, std::size_t n);
  std::ifstream in_;
  std::filesystem::path path_;
};

// u64 rows, u64 cols, u64 nnz, nnz (i64 row, i64 col) pairs, nnz f64 values.
void write_coo(Writer& w, const SparseMatrix& m);
SparseMatrix read_coo(Reader& r, bool symmetric = false);

// u64 count then i64 values.
void write_index_list(Writer& w, std::span<const std::int64_t> idx);
std::vector<std::int64_t> read_index_list(Reader& r);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);
std::string file_bytes(const std::filesystem::path& path);

}  // namespace gst::io
