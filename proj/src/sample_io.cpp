// SPDX-License-Identifier: Apache-2.0

#include "lis/sample_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <limits>

namespace lis {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (std::size_t i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b.data(), b.size());
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> b{};
  for (std::size_t i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFFu);
  out.write(b.data(), b.size());
}

std::uint64_t get_bytes(std::istream& in, std::size_t n) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) throw FormatError("sample block truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t checked_u32(Index v, const char* what) {
  if (v < 0 || static_cast<std::uint64_t>(v) > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError(std::string(what) + " does not fit the block header");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_sample_block(std::ostream& out, const SampleBlock& block) {
  const Index rows = block.dimension();
  const Index symbols = block.symbol_count();
  for (const auto& m : block.subcarriers) {
    if (m.rows() != rows || m.cols() != symbols) throw DimensionError("ragged sample block");
  }
  put_u32(out, kSampleBlockMagic);
  put_u32(out, checked_u32(rows, "row count"));
  put_u32(out, checked_u32(symbols, "symbol count"));
  put_u32(out, checked_u32(static_cast<Index>(block.subcarrier_count()), "subcarrier count"));
  for (const auto& m : block.subcarriers) {
    for (Index j = 0; j < symbols; ++j) {
      for (Index i = 0; i < rows; ++i) {
        put_f64(out, m(i, j).real());
        put_f64(out, m(i, j).imag());
      }
    }
  }
  if (!out) throw FormatError("failed writing sample block");
}

SampleBlock read_sample_block(std::istream& in, SampleDomain domain) {
  if (get_bytes(in, 4) != kSampleBlockMagic) throw FormatError("not a sample block (bad magic)");
  const auto rows = static_cast<Index>(get_bytes(in, 4));
  const auto symbols = static_cast<Index>(get_bytes(in, 4));
  const auto subcarriers = static_cast<std::size_t>(get_bytes(in, 4));
  SampleBlock block = SampleBlock::zeros(domain, rows, symbols, subcarriers);
  for (auto& m : block.subcarriers) {
    for (Index j = 0; j < symbols; ++j) {
      for (Index i = 0; i < rows; ++i) {
        const double re = std::bit_cast<double>(get_bytes(in, 8));
        const double im = std::bit_cast<double>(get_bytes(in, 8));
        m(i, j) = Complex(re, im);
      }
    }
  }
  return block;
}

void save_sample_block(const std::string& path, const SampleBlock& block) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_sample_block(out, block);
}

SampleBlock load_sample_block(const std::string& path, SampleDomain domain) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path + "'");
  return read_sample_block(in, domain);
}

}  // namespace lis
