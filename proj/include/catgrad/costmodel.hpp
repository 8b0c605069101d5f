#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "catgrad/codec.hpp"

namespace catgrad {

/// Which payload formula a message follows: sparse (index, value) records, or S+Q
/// (one magnitude plus indices).
enum class CostScheme : std::uint8_t { Sparse, SQ };

/// C(T) = P(T), the raw payload in bits.
struct PayloadRegime {
  bool operator==(const PayloadRegime&) const = default;
};

/// C(T) = c1 * P(T) + c0.
struct AffineRegime {
  double c1 = 1.0;
  double c0 = 0.0;
  bool operator==(const AffineRegime&) const = default;
};

/// C(T) = c1 * packets(T) + c0, with pmax_bits payload bits per packet.
struct PacketRegime {
  double c1 = 1.0;
  double c0 = 0.0;
  std::uint64_t pmax_bits = 0;
  bool operator==(const PacketRegime&) const = default;
};

using Regime = std::variant<PayloadRegime, AffineRegime, PacketRegime>;

/// Communication cost of one compressed message as a function of its sparsity budget T.
/// Costs are abstract units; counting bits is the affine case c1 = 1, c0 = 0.
class CostModel {
 public:
  /// Throws ConfigError when c1 <= 0, c0 < 0, or a packet cannot hold one entry.
  CostModel(Regime regime, CostScheme scheme, std::size_t dim, Precision fpp);

  static CostModel payload(CostScheme scheme, std::size_t dim, Precision fpp) {
    return CostModel(PayloadRegime{}, scheme, dim, fpp);
  }

  /// P^S(T) = T (ceil(log2 d) + FPP) or P^SQ(T) = FPP + T ceil(log2 d); zero for T = 0.
  std::uint64_t payload_bits(std::size_t budget) const;

  /// Packets needed for T entries. Entries never straddle packet boundaries; for S+Q the
  /// magnitude rides in the first packet.
  std::uint64_t packets(std::size_t budget) const;

  /// Cost of a message carrying T entries. T = 0 (empty message) costs c0 only.
  double cost(std::size_t budget) const;

  /// Entries per packet (index entries after the first packet for S+Q).
  /// Throws NotApplicable outside the packet regime.
  std::size_t tau_max() const;

  /// Largest T for every packet count, ascending and capped at d. Packet regime only.
  std::vector<std::size_t> block_ends() const;

  /// Payload and cost of sending the dense gradient: d values of FPP bits, no indices.
  std::uint64_t dense_payload_bits() const;
  double dense_cost() const;

  /// True for the payload and affine regimes, where C(T) is affine in T.
  bool is_affine() const noexcept { return !std::holds_alternative<PacketRegime>(regime_); }

  const Regime& regime() const noexcept { return regime_; }
  CostScheme scheme() const noexcept { return scheme_; }
  std::size_t dim() const noexcept { return dim_; }
  Precision fpp() const noexcept { return fpp_; }

  /// Same regime and precision, different message format.
  CostModel with_scheme(CostScheme scheme) const { return {regime_, scheme, dim_, fpp_}; }

 private:
  double scale(double units) const;

  Regime regime_;
  CostScheme scheme_;
  std::size_t dim_;
  Precision fpp_;
};

/// Cost model parsed from a command-line string, not yet bound to a dimension.
///   payload | payload-sparse | payload-sq
///   affine:c1=1,c0=0
///   packet:c1=576B,c0=64B,pmax=512B,fpp=32
/// A trailing B multiplies the number by 8 (bytes to bits). Optional keys: fpp, scheme=sparse|sq.
struct CostSpec {
  Regime regime = PayloadRegime{};
  std::optional<CostScheme> scheme;
  std::optional<Precision> fpp;

  /// Missing scheme and fpp fall back to the given defaults.
  CostModel bind(std::size_t dim, CostScheme default_scheme, Precision default_fpp) const;
  std::string to_string() const;
};

/// Throws ParseError with the offending token.
CostSpec parse_cost_spec(std::string_view text);

}  // namespace catgrad
