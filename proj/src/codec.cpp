#include "catgrad/codec.hpp"

#include <bit>
#include <string>

#include "catgrad/error.hpp"

namespace catgrad {

Precision precision_from_bits(int bits) {
  if (bits == 32) return Precision::Single;
  if (bits == 64) return Precision::Double;
  throw ParseError("floating-point precision must be 32 or 64, got " + std::to_string(bits));
}

unsigned index_bits(std::size_t dim) noexcept {
  if (dim <= 2) return 1;
  return static_cast<unsigned>(std::bit_width(dim - 1));
}

std::size_t wire_bits(PayloadScheme scheme, std::size_t dim, std::size_t entries, Precision fpp) {
  if (entries == 0) return 0;
  const std::size_t b = index_bits(dim);
  const std::size_t f = bits_of(fpp);
  switch (scheme) {
    case PayloadScheme::TopT:
    case PayloadScheme::Stochastic:
      return entries * (b + f);
    case PayloadScheme::SQ:
      return f + entries * b + entries;
  }
  return 0;
}

void BitWriter::write(std::uint64_t value, unsigned width) {
  for (unsigned k = width; k-- > 0;) {
    if (bits_ % 8 == 0) bytes_.push_back(0);
    if ((value >> k) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
    ++bits_;
  }
}

BitPayload BitWriter::finish() && { return {std::move(bytes_), bits_}; }

std::uint64_t BitReader::read(unsigned width) {
  if (width > remaining() || payload_.bytes.size() * 8 < payload_.bit_length) {
    throw CorruptPayload("truncated payload");
  }
  std::uint64_t v = 0;
  for (unsigned k = 0; k < width; ++k, ++pos_) {
    const unsigned bit = (payload_.bytes[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    v = (v << 1) | bit;
  }
  return v;
}

PayloadScheme scheme_of(const CompressedGradient& c) noexcept {
  if (const auto* s = std::get_if<SparseGradient>(&c)) {
    return s->kind == SparseKind::TopT ? PayloadScheme::TopT : PayloadScheme::Stochastic;
  }
  return PayloadScheme::SQ;
}

std::size_t entry_count(const CompressedGradient& c) noexcept {
  return std::visit([](const auto& g) { return g.size(); }, c);
}

std::size_t dim_of(const CompressedGradient& c) noexcept {
  return std::visit([](const auto& g) { return g.dim; }, c);
}

Vector to_dense(const CompressedGradient& c) {
  return std::visit([](const auto& g) { return g.to_dense(); }, c);
}

namespace {

std::uint64_t pack_value(double v, Precision fpp) {
  if (fpp == Precision::Single) return std::bit_cast<std::uint32_t>(static_cast<float>(v));
  return std::bit_cast<std::uint64_t>(v);
}

double unpack_value(std::uint64_t raw, Precision fpp) {
  if (fpp == Precision::Single) {
    return static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(raw)));
  }
  return std::bit_cast<double>(raw);
}

double round_value(double v, Precision fpp) { return unpack_value(pack_value(v, fpp), fpp); }

template <class Entries>
void check_indices(const Entries& entries, std::size_t dim, unsigned width) {
  const std::uint64_t limit = std::uint64_t{1} << width;
  std::int64_t prev = -1;
  for (const auto& e : entries) {
    if (e.index >= limit) {
      throw EncodingInvariant("index " + std::to_string(e.index) + " needs more than " +
                              std::to_string(width) + " bits");
    }
    if (e.index >= dim || static_cast<std::int64_t>(e.index) <= prev) {
      throw EncodingInvariant("indices must be strictly increasing and below the dimension");
    }
    prev = e.index;
  }
}

}  // namespace

CompressedGradient round_to_precision(CompressedGradient c, Precision fpp) {
  if (auto* s = std::get_if<SparseGradient>(&c)) {
    for (auto& e : s->entries) e.value = round_value(e.value, fpp);
  } else {
    auto& q = std::get<SQGradient>(c);
    if (!q.entries.empty()) q.magnitude = round_value(q.magnitude, fpp);
  }
  return c;
}

BitPayload encode(const CompressedGradient& c, Precision fpp) {
  const std::size_t dim = dim_of(c);
  const unsigned b = index_bits(dim);
  const unsigned f = bits_of(fpp);
  BitWriter w;
  if (const auto* s = std::get_if<SparseGradient>(&c)) {
    check_indices(s->entries, dim, b);
    for (const auto& e : s->entries) {
      w.write(e.index, b);
      w.write(pack_value(e.value, fpp), f);
    }
  } else {
    const auto& q = std::get<SQGradient>(c);
    check_indices(q.entries, dim, b);
    if (!q.entries.empty()) {
      if (!(q.magnitude > 0.0)) throw EncodingInvariant("S+Q magnitude must be positive");
      w.write(pack_value(q.magnitude, fpp), f);
      for (const auto& e : q.entries) w.write(e.index, b);
      for (const auto& e : q.entries) w.write(e.negative ? 1u : 0u, 1);
    }
  }
  const std::size_t expected = wire_bits(scheme_of(c), dim, entry_count(c), fpp);
  if (w.bit_length() != expected) throw EncodingInvariant("encoded length disagrees with layout");
  return std::move(w).finish();
}

CompressedGradient decode(const BitPayload& payload, std::size_t dim, PayloadScheme scheme,
                          Precision fpp) {
  if (dim == 0) throw CorruptPayload("dimension must be positive");
  if (payload.bytes.size() != (payload.bit_length + 7) / 8) {
    throw CorruptPayload("byte buffer does not match bit length");
  }
  const unsigned b = index_bits(dim);
  const unsigned f = bits_of(fpp);
  const std::size_t n = payload.bit_length;
  BitReader r(payload);

  auto read_index = [&](std::int64_t prev) {
    const std::uint64_t j = r.read(b);
    if (j >= dim) throw CorruptPayload("index " + std::to_string(j) + " out of range");
    if (static_cast<std::int64_t>(j) <= prev) throw CorruptPayload("indices not increasing");
    return static_cast<std::uint32_t>(j);
  };

  if (scheme == PayloadScheme::SQ) {
    SQGradient q{dim, 0.0, {}};
    if (n == 0) return q;
    if (n < f || (n - f) % (b + 1) != 0) throw CorruptPayload("S+Q payload length is malformed");
    const std::size_t count = (n - f) / (b + 1);
    q.magnitude = unpack_value(r.read(f), fpp);
    std::int64_t prev = -1;
    for (std::size_t k = 0; k < count; ++k) {
      const std::uint32_t j = read_index(prev);
      q.entries.push_back({j, false});
      prev = j;
    }
    for (auto& e : q.entries) e.negative = r.read(1) != 0;
    return q;
  }

  SparseGradient s{dim, {},
                   scheme == PayloadScheme::TopT ? SparseKind::TopT : SparseKind::Stochastic};
  if (n % (b + f) != 0) throw CorruptPayload("sparse payload length is malformed");
  std::int64_t prev = -1;
  for (std::size_t k = 0; k < n / (b + f); ++k) {
    const std::uint32_t j = read_index(prev);
    s.entries.push_back({j, unpack_value(r.read(f), fpp)});
    prev = j;
  }
  return s;
}

}  // namespace catgrad
