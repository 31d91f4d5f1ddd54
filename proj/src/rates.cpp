// SPDX-License-Identifier: Apache-2.0

#include "lis/rates.hpp"

#include <cstdio>
#include <sstream>
#include <vector>

namespace lis {

namespace {

std::int64_t mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw RangeError("rate overflows 64-bit bits/s");
  return out;
}

std::int64_t add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw RangeError("rate overflows 64-bit bits/s");
  return out;
}

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::CentralizedParallel: return "centralized_parallel";
    case Scheme::CentralizedChained: return "centralized_chained";
    case Scheme::DistributedBeamforming: return "distributed";
  }
  return "?";
}

Scheme parse_scheme(const std::string& text) {
  if (text == "centralized_parallel") return Scheme::CentralizedParallel;
  if (text == "centralized_chained") return Scheme::CentralizedChained;
  if (text == "distributed") return Scheme::DistributedBeamforming;
  throw ParseError("unknown scheme '" + text + "'");
}

BitRate per_element_rate(std::int64_t bandwidth_hz, std::int64_t adc_bits, Ratio oversampling) {
  if (bandwidth_hz < 1 || adc_bits < 1 || oversampling.den < 1 || oversampling.num < 1) {
    throw RangeError("element rate needs positive bandwidth, resolution and oversampling");
  }
  const Ratio os = oversampling.reduced();
  const std::int64_t scaled = mul(mul(mul(2, bandwidth_hz), adc_bits), os.num);
  if (scaled % os.den != 0) throw RangeError("element rate is not a whole number of bits/s");
  return scaled / os.den;
}

BitRate per_element_rate(const SurfaceConfig& config) {
  return per_element_rate(config.bandwidth_hz, config.adc_bits, config.oversampling);
}

BitRate per_module_rate(const SurfaceConfig& config) {
  validate(config);
  return mul(config.antennas_per_module(), per_element_rate(config));
}

BitRate centralized_max(const SurfaceConfig& config) {
  validate(config);
  return mul(config.antennas, per_element_rate(config));
}

BitRate centralized_aggregate(const SurfaceConfig& config) {
  validate(config);
  const std::int64_t depth = config.chain_depth();
  // Multiply before halving so odd M stays exact.  M(depth+1)R is always
  // even: it equals 2 * chains * depth(depth+1)/2 * (M/N)R.
  const std::int64_t twice = mul(mul(config.antennas, depth + 1), per_element_rate(config));
  return twice / 2;
}

BitRate centralized_route_aggregate(const SurfaceConfig& config, std::span<const std::int64_t> hop_counts) {
  validate(config);
  if (static_cast<std::int64_t>(hop_counts.size()) != config.modules) {
    throw RangeError("need one hop count per module");
  }
  std::int64_t hops = 0;
  for (auto h : hop_counts) {
    if (h < 1) throw RangeError("hop counts must be >= 1");
    hops = add(hops, h);
  }
  return mul(per_module_rate(config), hops);
}

BitRate distributed_max(const SurfaceConfig& config) {
  validate(config);
  return mul(mul(mul(2, config.terminals), config.bandwidth_hz), config.beamf_bits);
}

BitRate distributed_aggregate(const SurfaceConfig& config) {
  return mul(config.modules, distributed_max(config));
}

double backplane_power(BitRate rate, double energy_per_bit) {
  if (rate < 0 || energy_per_bit < 0.0) throw RangeError("power needs non-negative rate and energy");
  return static_cast<double>(rate) * energy_per_bit;
}

ThroughputReport report(const SurfaceConfig& config, Scheme scheme) {
  validate(config);
  ThroughputReport r;
  r.scheme = scheme;
  r.r_element = per_element_rate(config);
  r.r_module = per_module_rate(config);
  switch (scheme) {
    case Scheme::CentralizedParallel:
      r.r_max_central = centralized_max(config);
      r.r_aggregate = r.r_max_central;
      break;
    case Scheme::CentralizedChained:
      r.r_max_central = centralized_max(config);
      r.r_aggregate = centralized_aggregate(config);
      break;
    case Scheme::DistributedBeamforming:
      r.r_max_central = distributed_max(config);
      r.r_aggregate = distributed_aggregate(config);
      break;
  }
  r.power_backplane = backplane_power(r.r_aggregate, config.energy_per_bit);
  return r;
}

double to_gibps(BitRate rate) { return static_cast<double>(rate) / static_cast<double>(1LL << 30); }

std::string format_gbps(BitRate rate) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f Gb/s", static_cast<double>(rate) / 1e9);
  return buf;
}

std::string format_gibps(BitRate rate) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f Gib/s", to_gibps(rate));
  return buf;
}

std::string report_csv_header() {
  return "scheme,M,N,K,B_hz,n_res,n_oversamp,n_bit_beamf,n_ch,r_element,r_module,r_max_central,r_aggregate,power_w";
}

std::string report_csv_row(const SurfaceConfig& c, const ThroughputReport& r) {
  char power[64];
  std::snprintf(power, sizeof power, "%.17g", r.power_backplane);
  std::ostringstream out;
  out << to_string(r.scheme) << ',' << c.antennas << ',' << c.modules << ',' << c.terminals << ','
      << c.bandwidth_hz << ',' << c.adc_bits << ',' << c.oversampling.str() << ',' << c.beamf_bits << ','
      << c.chains << ',' << r.r_element << ',' << r.r_module << ',' << r.r_max_central << ','
      << r.r_aggregate << ',' << power;
  return out.str();
}

ReportRow parse_report_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (fields.size() != 14) {
    throw ParseError("report row needs 14 fields, got " + std::to_string(fields.size()));
  }
  auto num = [&](std::size_t i) { return parse_integer("column " + std::to_string(i), fields[i]); };
  ReportRow row;
  row.scheme = parse_scheme(fields[0]);
  row.antennas = num(1);
  row.modules = num(2);
  row.terminals = num(3);
  row.bandwidth_hz = num(4);
  row.adc_bits = num(5);
  row.oversampling = Ratio::parse(fields[6]);
  row.beamf_bits = num(7);
  row.chains = num(8);
  row.r_element = num(9);
  row.r_module = num(10);
  row.r_max_central = num(11);
  row.r_aggregate = num(12);
  try {
    row.power_w = std::stod(fields[13]);
  } catch (const std::exception&) {
    throw ParseError("bad power column '" + fields[13] + "'");
  }
  return row;
}

}  // namespace lis
