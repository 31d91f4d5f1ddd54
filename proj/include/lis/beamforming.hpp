// SPDX-License-Identifier: Apache-2.0
//
// Sample-level linear beamforming.  Every quantity is kept per OFDM
// subcarrier and subcarriers never mix.  Centralized processing applies the
// full M x K weight matrix at the central processor; distributed processing
// lets each common module combine only its own antennas and forwards K-wide
// partial sums along the topology's route tree.

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lis/core.hpp"
#include "lis/topology.hpp"

namespace lis {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

class DimensionError : public Error {
 public:
  using Error::Error;
};

class RankError : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

/// Module antenna ranges overlap or leave antennas uncovered.
class PartitionError : public Error {
 public:
  using Error::Error;
};

/// One M x K channel per subcarrier.
struct ChannelMatrix {
  std::vector<CMatrix> subcarriers;

  Index antennas() const { return subcarriers.empty() ? 0 : subcarriers.front().rows(); }
  Index terminals() const { return subcarriers.empty() ? 0 : subcarriers.front().cols(); }
  std::size_t subcarrier_count() const { return subcarriers.size(); }
};

enum class BeamformingMethod { MRC, ZF };

/// One M x K weight matrix per subcarrier.  Uplink combining is W^H y,
/// downlink precoding is W x.
struct BeamformingWeights {
  std::vector<CMatrix> subcarriers;
  BeamformingMethod method{BeamformingMethod::ZF};

  Index antennas() const { return subcarriers.empty() ? 0 : subcarriers.front().rows(); }
  Index terminals() const { return subcarriers.empty() ? 0 : subcarriers.front().cols(); }
  std::size_t subcarrier_count() const { return subcarriers.size(); }
};

/// Antenna-domain blocks have M rows, terminal-domain blocks K rows; one
/// column per symbol, one matrix per subcarrier.
enum class SampleDomain { Antenna, Terminal };

struct SampleBlock {
  SampleDomain domain{SampleDomain::Antenna};
  std::vector<CMatrix> subcarriers;
  std::optional<int> quantized_bits;  // empty while exact

  Index dimension() const { return subcarriers.empty() ? 0 : subcarriers.front().rows(); }
  Index symbol_count() const { return subcarriers.empty() ? 0 : subcarriers.front().cols(); }
  std::size_t subcarrier_count() const { return subcarriers.size(); }

  static SampleBlock zeros(SampleDomain domain, Index dimension, Index symbols, std::size_t subcarriers);
};

/// Largest |a - b| over every real and imaginary component.
double max_abs_deviation(const SampleBlock& a, const SampleBlock& b);

/// i.i.d. CN(0, 1) entries, reproducible per seed.
ChannelMatrix generate_channel(Index antennas, Index terminals, std::size_t subcarriers, std::uint64_t seed);

/// Unit-energy QPSK symbols for K terminals.
SampleBlock random_symbols(Index terminals, Index symbols, std::size_t subcarriers, std::uint64_t seed);

/// Orthogonal pilots: row k of the K x P matrix is the k-th length-P DFT row.
SampleBlock dft_pilots(Index terminals, Index length, std::size_t subcarriers);

/// Noiseless reception y = H x on every subcarrier.
SampleBlock propagate(const ChannelMatrix& h, const SampleBlock& x);

/// Adds CN(0, sigma^2) with sigma^2 set from the block's mean power and `snr_db`.
void add_noise(SampleBlock& block, double snr_db, std::uint64_t seed);

/// Least-squares channel estimate Y P^H (P P^H)^-1 from a K x P pilot
/// block and the M x P block received during it.
ChannelMatrix estimate_channel(const SampleBlock& pilots, const SampleBlock& received);

/// MRC: W = H.  ZF: W = H (H^H H)^-1, formed through a thin QR of H so that
/// W^H H stays at identity even for badly conditioned channels.
BeamformingWeights compute_weights(const ChannelMatrix& h, BeamformingMethod method);

/// ||y - P_H y||_F / ||y||_F, where P_H projects onto the column space of H.
double subspace_residual(const ChannelMatrix& h, const SampleBlock& y);

SampleBlock centralized_uplink(const BeamformingWeights& w, const SampleBlock& y);
SampleBlock centralized_downlink(const BeamformingWeights& w, const SampleBlock& x);

/// A common module: a contiguous run of antennas, their weight rows, the
/// K-wide partial-sum accumulator and the latency-matching buffer depth.
struct ModuleState {
  NodeId id{};
  Index first_antenna{};
  Index antenna_count{};
  std::vector<CMatrix> weights;      // antenna_count x K per subcarrier
  std::vector<CMatrix> accumulator;  // K x symbols per subcarrier
  std::int64_t buffer_depth{};
};

/// Splits the weight rows evenly over the topology's modules in id order.
/// `buffer_depths`, when given, holds one depth per module.
std::vector<ModuleState> make_modules(const BeamformingWeights& w, const Topology& topology,
                                      std::span<const std::int64_t> buffer_depths = {});

/// A module's own contribution: sum over its antennas of conj(w_m) y_m.
std::vector<CMatrix> module_partial_sum(const ModuleState& module, const SampleBlock& y);

/// Uniform quantization applied to every partial sum a module forwards.
struct PartialSumQuantizer {
  int bits{15};
  double full_scale{1.0};
};

struct UplinkResult {
  SampleBlock estimate;            // K-domain, as delivered to the central processor
  std::size_t saturations{0};      // clipped components, quantized runs only
};

/// Each module forms its local partial sum; partial sums then flow along the
/// route tree children-before-parent and are added at every relay.  Module
/// accumulators hold the forwarded sums afterwards.
UplinkResult distributed_uplink(std::span<ModuleState> modules, const SampleBlock& y, const Topology& topology,
                                std::optional<PartialSumQuantizer> quantizer = std::nullopt);

/// Terminal streams are broadcast from the central processor down the route
/// tree; each module precodes onto its own antennas.
SampleBlock distributed_downlink(std::span<const ModuleState> modules, const SampleBlock& x,
                                 const Topology& topology);

struct QuantizeResult {
  SampleBlock block;
  std::size_t saturations{0};
};

/// Midrise quantizer with step 2 * full_scale / 2^bits on each of I and Q.
/// Inputs outside [-full_scale, full_scale) clip to the outer codes.
QuantizeResult quantize(const SampleBlock& block, int bits, double full_scale);
double quantize_component(double value, int bits, double full_scale, bool* clipped = nullptr);

enum class Direction { Uplink, Downlink };

/// Computes weights and runs the requested direction independently on every
/// subcarrier, centrally or, when `topology` is given, distributed over it.
SampleBlock per_subcarrier_process(const ChannelMatrix& h, BeamformingMethod method, const SampleBlock& in,
                                   Direction direction, const Topology* topology = nullptr);

}  // namespace lis
