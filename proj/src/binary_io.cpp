#include "gst/binary_io.hpp"

#include <bit>
#include <cstring>
#include <iterator>
#include <sstream>

#include "gst/error.hpp"

namespace gst::io {
namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
    return v;
  }
}

}  // namespace

Writer::Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  if (!out_) fail_io("cannot write " + path.string());
}

void Writer::u64(std::uint64_t v) {
  v = to_little(v);
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void Writer::i64(std::int64_t v) {
  v = to_little(v);
  out_.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void Writer::f64(double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  u64(bits);
}

void Writer::f64s(std::span<const double> v) {
  if constexpr (std::endian::native == std::endian::little) {
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  } else {
    for (double x : v) f64(x);
  }
}

void Writer::i64s(std::span<const std::int64_t> v) {
  for (std::int64_t x : v) i64(x);
}

void Writer::close() {
  out_.flush();
  if (!out_) fail_io("write failed for " + path_.string());
  out_.close();
}

Reader::Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
  if (!in_) fail_io("cannot open " + path.string());
}

void Reader::raw(void* dst, std::size_t n) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) fail_io("truncated file " + path_.string());
}

std::uint64_t Reader::u64() {
  std::uint64_t v;
  raw(&v, sizeof v);
  return to_little(v);
}

std::int64_t Reader::i64() {
  std::int64_t v;
  raw(&v, sizeof v);
  return to_little(v);
}

double Reader::f64() { return std::bit_cast<double>(u64()); }

void Reader::f64s(std::span<double> out) {
  if constexpr (std::endian::native == std::endian::little) {
    raw(out.data(), out.size_bytes());
  } else {
    for (double& x : out) x = f64();
  }
}

std::vector<std::int64_t> Reader::i64s(std::size_t n) {
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = i64();
  return v;
}

bool Reader::at_end() { return in_.peek() == std::char_traits<char>::eof(); }

void write_coo(Writer& w, const SparseMatrix& m) {
  w.u64(m.rows());
  w.u64(m.cols());
  w.u64(m.nnz());
  for (std::size_t e = 0; e < m.nnz(); ++e) {
    w.i64(m.row_indices()[e]);
    w.i64(m.col_indices()[e]);
  }
  w.f64s(m.values());
}

SparseMatrix read_coo(Reader& r, bool symmetric) {
  const std::uint64_t rows = r.u64(), cols = r.u64(), nnz = r.u64();
  std::vector<Triplet> t(nnz);
  for (auto& e : t) {
    e.row = r.i64();
    e.col = r.i64();
  }
  std::vector<double> vals(nnz);
  r.f64s(vals);
  for (std::size_t e = 0; e < nnz; ++e) t[e].value = vals[e];
  return SparseMatrix::from_triplets(rows, cols, std::move(t), symmetric);
}

void write_index_list(Writer& w, std::span<const std::int64_t> idx) {
  w.u64(idx.size());
  w.i64s(idx);
}

std::vector<std::int64_t> read_index_list(Reader& r) { return r.i64s(r.u64()); }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_io("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace gst::io
