// SPDX-License-Identifier: Apache-2.0
//
// Binary sample-block files.  A 16-byte little-endian header of four u32
// words (magic "LISB", rows, symbols, subcarriers) is followed by
// interleaved I/Q little-endian float64 values, subcarrier-major, then
// symbol, then row.  The header does not record the domain; readers state
// whether they expect antenna rows (M) or terminal rows (K).

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "lis/beamforming.hpp"

namespace lis {

inline constexpr std::uint32_t kSampleBlockMagic = 0x4253494C;  // "LISB" read as little-endian bytes

class FormatError : public Error {
 public:
  using Error::Error;
};

void write_sample_block(std::ostream& out, const SampleBlock& block);
SampleBlock read_sample_block(std::istream& in, SampleDomain domain);

void save_sample_block(const std::string& path, const SampleBlock& block);
SampleBlock load_sample_block(const std::string& path, SampleDomain domain);

}  // namespace lis
