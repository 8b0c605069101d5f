#include "catgrad/transport.hpp"

#include <algorithm>
#include <optional>
#include <string>

#include "catgrad/error.hpp"

namespace catgrad {

namespace {

void put_be(Frame& out, std::uint64_t v, unsigned bytes) {
  for (unsigned k = bytes; k-- > 0;) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint64_t get_be(std::span<const std::uint8_t> in, std::size_t at, unsigned bytes) {
  std::uint64_t v = 0;
  for (unsigned k = 0; k < bytes; ++k) v = (v << 8) | in[at + k];
  return v;
}

CostScheme cost_scheme(PayloadScheme s) {
  return s == PayloadScheme::SQ ? CostScheme::SQ : CostScheme::Sparse;
}

}  // namespace

std::size_t frame_bytes(PayloadScheme scheme, std::size_t dim, std::size_t entries,
                        Precision fpp) {
  return kFrameHeaderBytes + (wire_bits(scheme, dim, entries, fpp) + 7) / 8;
}

Frame frame_encode(const Message& msg) {
  const BitPayload payload = encode(msg.gradient, msg.fpp);
  const std::size_t entries = entry_count(msg.gradient);
  if (entries > 0xffffffffULL) throw EncodingInvariant("too many entries for one frame");
  Frame out;
  out.reserve(kFrameHeaderBytes + payload.bytes.size());
  out.insert(out.end(), kFrameMagic.begin(), kFrameMagic.end());
  put_be(out, msg.iteration, 4);
  put_be(out, msg.worker, 2);
  out.push_back(static_cast<std::uint8_t>(scheme_of(msg.gradient)));
  put_be(out, entries, 4);
  out.push_back(static_cast<std::uint8_t>(bits_of(msg.fpp)));
  out.insert(out.end(), payload.bytes.begin(), payload.bytes.end());
  return out;
}

Message frame_decode(std::span<const std::uint8_t> bytes, std::size_t dim) {
  if (bytes.size() < kFrameHeaderBytes) throw CorruptFrame("frame shorter than its header");
  if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), bytes.begin())) {
    throw CorruptFrame("bad frame magic");
  }
  Message msg;
  msg.iteration = static_cast<std::uint32_t>(get_be(bytes, 4, 4));
  msg.worker = static_cast<std::uint16_t>(get_be(bytes, 8, 2));
  const std::uint8_t scheme_byte = bytes[10];
  if (scheme_byte > static_cast<std::uint8_t>(PayloadScheme::SQ)) {
    throw CorruptFrame("unknown scheme " + std::to_string(scheme_byte));
  }
  const auto scheme = static_cast<PayloadScheme>(scheme_byte);
  const std::size_t entries = get_be(bytes, 11, 4);
  const std::uint8_t fpp_byte = bytes[15];
  if (fpp_byte != 32 && fpp_byte != 64) {
    throw CorruptFrame("unknown precision " + std::to_string(fpp_byte));
  }
  msg.fpp = static_cast<Precision>(fpp_byte);
  if (entries > dim) throw CorruptFrame("entry count exceeds the dimension");

  const std::size_t bits = wire_bits(scheme, dim, entries, msg.fpp);
  if (bytes.size() != kFrameHeaderBytes + (bits + 7) / 8) {
    throw CorruptFrame("frame length " + std::to_string(bytes.size()) + " does not match header");
  }
  BitPayload payload{{bytes.begin() + kFrameHeaderBytes, bytes.end()}, bits};
  if (bits % 8 != 0) {
    const std::uint8_t pad_mask = static_cast<std::uint8_t>(0xffu >> (bits % 8));
    if (payload.bytes.back() & pad_mask) throw CorruptFrame("nonzero padding bits");
  }
  try {
    msg.gradient = decode(payload, dim, scheme, msg.fpp);
  } catch (const CorruptPayload& e) {
    throw CorruptFrame(std::string("payload: ") + e.what());
  }
  return msg;
}

double message_cost(const CostModel& model, const CompressedGradient& c) {
  return model.with_scheme(cost_scheme(scheme_of(c))).cost(entry_count(c));
}

Vector average(std::span<const CompressedGradient> parts, std::size_t dim) {
  Vector sum(dim, 0.0);
  for (const auto& c : parts) {
    require_same_size(dim, dim_of(c), "average");
    const Vector dense = to_dense(c);
    for (std::size_t j = 0; j < dim; ++j) sum[j] += dense[j];
  }
  const double n = static_cast<double>(parts.size());
  for (double& s : sum) s /= n;
  return sum;
}

RoundResult simulate_round(const RoundSpec& spec, std::span<const Frame> frames,
                           const CostModel& model) {
  std::vector<std::optional<Message>> slots(spec.workers);
  for (const Frame& f : frames) {
    Message m = frame_decode(f, spec.dim);
    if (m.iteration != spec.iteration) {
      throw IncompleteRound("frame for iteration " + std::to_string(m.iteration) +
                            " in round " + std::to_string(spec.iteration));
    }
    if (m.worker >= spec.workers) {
      throw IncompleteRound("unknown worker " + std::to_string(m.worker));
    }
    if (slots[m.worker]) throw IncompleteRound("duplicate frame from worker " + std::to_string(m.worker));
    slots[m.worker] = std::move(m);
  }

  RoundResult out;
  std::vector<CompressedGradient> parts;
  for (std::size_t j = 0; j < spec.workers; ++j) {
    if (!slots[j]) throw IncompleteRound("missing frame from worker " + std::to_string(j));
    const CompressedGradient& c = slots[j]->gradient;
    out.cost += message_cost(model, c);
    out.payload_bits += model.with_scheme(cost_scheme(scheme_of(c))).payload_bits(entry_count(c));
    parts.push_back(c);
    out.messages.push_back(std::move(*slots[j]));
  }
  out.aggregate = average(parts, spec.dim);
  return out;
}

}  // namespace catgrad
