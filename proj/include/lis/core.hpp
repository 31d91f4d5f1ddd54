// SPDX-License-Identifier: Apache-2.0
//
// Surface configuration shared by every part of the backplane toolkit.

#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace lis {

/// Root of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A count does not divide another (modules into antennas, chains into modules).
class DivisibilityError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// The module grid does not tile the module count.
class GeometryError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A parameter is zero, negative, or otherwise out of its domain.
class RangeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Malformed configuration text.
class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Exact non-negative rational, used for the oversampling factor.
struct Ratio {
  std::int64_t num{1};
  std::int64_t den{1};

  /// Parses "2", "1.25" or "5/4" without going through floating point.
  static Ratio parse(const std::string& text);
  Ratio reduced() const;
  std::string str() const;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Ratio& a, const Ratio& b) {
    return a.num * b.den == b.num * a.den;
  }
};

/// Where the central processor sits relative to the module grid in the
/// fully parallel backplane.
enum class CpPosition { Center, Corner };

struct GridShape {
  std::int64_t rows{1};
  std::int64_t cols{1};
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// Full parameterization of a surface.  Field names follow the roles in the
/// throughput model: M antennas split over N common modules serving K
/// terminals over a bandwidth B.
struct SurfaceConfig {
  std::int64_t antennas{0};        // M
  std::int64_t modules{0};         // N
  std::int64_t terminals{0};       // K
  std::int64_t bandwidth_hz{0};    // B
  std::int64_t adc_bits{0};        // converter resolution
  Ratio oversampling{1, 1};        // >= 1
  std::int64_t beamf_bits{0};      // per I/Q component of a beamformed sample
  std::int64_t chains{1};          // parallel daisy-chains
  double energy_per_bit{1.0e-12};  // J/bit
  GridShape grid{};
  double module_pitch_m{0.1};
  CpPosition cp_position{CpPosition::Center};

  std::int64_t antennas_per_module() const { return antennas / modules; }
  /// Modules per daisy-chain.
  std::int64_t chain_depth() const { return modules / chains; }

  friend bool operator==(const SurfaceConfig&, const SurfaceConfig&) = default;
};

/// Returns `config` unchanged if every invariant holds, throws otherwise.
///
/// Besides divisibility and positivity, the bits carried per antenna per
/// complex sample (2 * adc_bits * oversampling) must be a whole number so
/// that every rate stays an exact integer number of bits per second.
const SurfaceConfig& validate(const SurfaceConfig& config);

/// Near-square factorization rows x cols = n with rows <= cols.
GridShape default_grid(std::int64_t n);

/// Plain `key = value` text with `#` comments.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);

/// Builds and validates a configuration from parsed keys.  Keys outside the
/// configuration vocabulary are rejected unless listed in `extra_keys`.
SurfaceConfig config_from_key_values(const KeyValues& kv,
                                     const std::set<std::string>& extra_keys = {});

SurfaceConfig load_config(const std::string& path);

/// Inverse of config_from_key_values.
std::string to_key_values(const SurfaceConfig& config);

/// Integer parameters in a config file may be written as "20e6".
std::int64_t parse_integer(const std::string& key, const std::string& text);

}  // namespace lis
