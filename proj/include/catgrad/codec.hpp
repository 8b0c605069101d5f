#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "catgrad/compressors.hpp"

namespace catgrad {

/// Bits per transmitted floating-point value.
enum class Precision : std::uint8_t { Single = 32, Double = 64 };

constexpr unsigned bits_of(Precision p) noexcept { return static_cast<unsigned>(p); }

/// Throws ParseError for anything other than 32 or 64.
Precision precision_from_bits(int bits);

/// Wire layout of a compressed gradient.
enum class PayloadScheme : std::uint8_t { TopT = 0, Stochastic = 1, SQ = 2 };

/// ceil(log2 d), with d = 1 mapped to 1 bit.
unsigned index_bits(std::size_t dim) noexcept;

/// Exact encoded length. Sparse schemes: T * (index_bits + FPP). SQ: FPP + T * index_bits plus
/// T trailing sign bits. An empty gradient encodes to zero bits for every scheme.
std::size_t wire_bits(PayloadScheme scheme, std::size_t dim, std::size_t entries, Precision fpp);

/// A bit string packed MSB-first into bytes; bits past bit_length are zero.
struct BitPayload {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_length = 0;
  bool operator==(const BitPayload&) const = default;
};

using CompressedGradient = std::variant<SparseGradient, SQGradient>;

PayloadScheme scheme_of(const CompressedGradient& c) noexcept;
std::size_t entry_count(const CompressedGradient& c) noexcept;
std::size_t dim_of(const CompressedGradient& c) noexcept;
Vector to_dense(const CompressedGradient& c);

/// Rounds every transmitted value to the wire precision, i.e. decode(encode(c)).
CompressedGradient round_to_precision(CompressedGradient c, Precision fpp);

/// Big-endian, MSB-first fixed-width packing. Throws EncodingInvariant on malformed input.
BitPayload encode(const CompressedGradient& c, Precision fpp);

/// Inverse of encode. Throws CorruptPayload on truncation or out-of-range indices.
CompressedGradient decode(const BitPayload& payload, std::size_t dim, PayloadScheme scheme,
                          Precision fpp);

/// MSB-first bit writer.
class BitWriter {
 public:
  void write(std::uint64_t value, unsigned width);
  std::size_t bit_length() const noexcept { return bits_; }
  BitPayload finish() &&;

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bits_ = 0;
};

class BitReader {
 public:
  explicit BitReader(const BitPayload& payload) noexcept : payload_(payload) {}
  /// Throws CorruptPayload when fewer than width bits remain.
  std::uint64_t read(unsigned width);
  std::size_t remaining() const noexcept { return payload_.bit_length - pos_; }

 private:
  const BitPayload& payload_;
  std::size_t pos_ = 0;
};

}  // namespace catgrad
