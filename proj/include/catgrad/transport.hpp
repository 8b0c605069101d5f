#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "catgrad/codec.hpp"
#include "catgrad/costmodel.hpp"

namespace catgrad {

/// "CAT" followed by the format version.
inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'C', 'A', 'T', 0x01};
inline constexpr std::size_t kFrameHeaderBytes = 16;

/// One worker-to-master message.
struct Message {
  std::uint32_t iteration = 0;
  std::uint16_t worker = 0;
  Precision fpp = Precision::Double;
  CompressedGradient gradient;
};

using Frame = std::vector<std::uint8_t>;

/// Header (big-endian):
///   magic[4] | iteration u32 | worker u16 | scheme u8 | entries u32 | fpp u8
/// followed by the payload padded with zero bits to a whole byte.
Frame frame_encode(const Message& msg);

/// Throws CorruptFrame on bad magic, unknown scheme or precision, length mismatch, nonzero
/// padding, or an undecodable payload.
Message frame_decode(std::span<const std::uint8_t> bytes, std::size_t dim);

/// Total frame size for a given payload.
std::size_t frame_bytes(PayloadScheme scheme, std::size_t dim, std::size_t entries, Precision fpp);

/// Cost of one message under a model; the model's payload formula follows the message scheme.
double message_cost(const CostModel& model, const CompressedGradient& c);

/// (1/n) * sum of the decoded gradients, accumulated in the order given.
Vector average(std::span<const CompressedGradient> parts, std::size_t dim);

struct RoundSpec {
  std::uint32_t iteration = 0;
  std::size_t dim = 0;
  std::size_t workers = 0;
};

struct RoundResult {
  Vector aggregate;
  double cost = 0.0;
  std::uint64_t payload_bits = 0;
  std::vector<Message> messages;  // sorted by worker id
};

/// Master side of one synchronous round: decodes every frame, checks that each worker
/// 0..n-1 reported exactly once for this iteration, and averages in worker-id order.
/// Throws IncompleteRound for missing or duplicate workers or a foreign iteration.
RoundResult simulate_round(const RoundSpec& spec, std::span<const Frame> frames,
                           const CostModel& model);

}  // namespace catgrad
