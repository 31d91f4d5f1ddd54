// SPDX-License-Identifier: Apache-2.0
//
// Closed-form backplane throughput and power.  Every rate is an exact
// integer number of bits per second; overflow raises RangeError.

#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "lis/core.hpp"

namespace lis {

using BitRate = std::int64_t;  // bits/s

enum class Scheme { CentralizedParallel, CentralizedChained, DistributedBeamforming };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& text);

/// Rate produced or consumed by one antenna element: 2 * B * adc_bits * oversampling.
BitRate per_element_rate(std::int64_t bandwidth_hz, std::int64_t adc_bits, Ratio oversampling);
BitRate per_element_rate(const SurfaceConfig& config);

/// (M/N) times the element rate.
BitRate per_module_rate(const SurfaceConfig& config);

/// Every antenna waveform crossing into the central processor: M * R.
BitRate centralized_max(const SurfaceConfig& config);

/// Sum over all links of N_ch daisy-chains of depth N/N_ch, in closed form
/// (M/2)(depth + 1)R.
BitRate centralized_aggregate(const SurfaceConfig& config);

/// Centralized traffic on an arbitrary route tree: each module's waveforms
/// cross one link per hop, so the total is (M/N) R times the sum of hop
/// counts.  Reduces to centralized_aggregate for daisy-chains and to
/// centralized_max for the star.
BitRate centralized_route_aggregate(const SurfaceConfig& config, std::span<const std::int64_t> hop_counts);

/// K beamformed I/Q streams into the central processor: 2 K B beamf_bits.
BitRate distributed_max(const SurfaceConfig& config);

/// Those K streams delivered over N module links: 2 N K B beamf_bits.
BitRate distributed_aggregate(const SurfaceConfig& config);

/// Watts drawn by moving `rate` at `energy_per_bit` joules per bit.
double backplane_power(BitRate rate, double energy_per_bit);

struct ThroughputReport {
  Scheme scheme{};
  BitRate r_element{};
  BitRate r_module{};
  BitRate r_max_central{};
  BitRate r_aggregate{};
  double power_backplane{};  // W

  friend bool operator==(const ThroughputReport&, const ThroughputReport&) = default;
};

ThroughputReport report(const SurfaceConfig& config, Scheme scheme);

/// 1e9 and 2^30 renderings, e.g. "409.60 Gb/s" and "381.47 Gib/s".
std::string format_gbps(BitRate rate);
std::string format_gibps(BitRate rate);
double to_gibps(BitRate rate);

std::string report_csv_header();
std::string report_csv_row(const SurfaceConfig& config, const ThroughputReport& report);

/// Fields of one parsed CSV report row.
struct ReportRow {
  Scheme scheme{};
  std::int64_t antennas{}, modules{}, terminals{}, bandwidth_hz{}, adc_bits{};
  Ratio oversampling{};
  std::int64_t beamf_bits{}, chains{};
  BitRate r_element{}, r_module{}, r_max_central{}, r_aggregate{};
  double power_w{};
};

ReportRow parse_report_row(const std::string& line);

}  // namespace lis
