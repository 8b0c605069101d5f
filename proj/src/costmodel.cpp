#include "catgrad/costmodel.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "catgrad/error.hpp"

namespace catgrad {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

CostModel::CostModel(Regime regime, CostScheme scheme, std::size_t dim, Precision fpp)
    : regime_(regime), scheme_(scheme), dim_(dim), fpp_(fpp) {
  if (dim == 0) throw ConfigError("cost model dimension must be positive");
  const std::uint64_t b = index_bits(dim);
  const std::uint64_t f = bits_of(fpp);
  std::visit(overloaded{
                 [](const PayloadRegime&) {},
                 [](const AffineRegime& a) {
                   if (!(a.c1 > 0.0) || !(a.c0 >= 0.0)) {
                     throw ConfigError("affine cost needs c1 > 0 and c0 >= 0");
                   }
                 },
                 [&](const PacketRegime& p) {
                   if (!(p.c1 > 0.0) || !(p.c0 >= 0.0)) {
                     throw ConfigError("packet cost needs c1 > 0 and c0 >= 0");
                   }
                   // Smallest unit that must fit in one packet.
                   const std::uint64_t need = scheme == CostScheme::Sparse ? b + f : f + b;
                   if (p.pmax_bits < need || p.pmax_bits < f) {
                     throw ConfigError("packet payload of " + std::to_string(p.pmax_bits) +
                                       " bits cannot hold one entry of " + std::to_string(need) +
                                       " bits");
                   }
                 },
             },
             regime_);
}

std::uint64_t CostModel::payload_bits(std::size_t budget) const {
  if (budget == 0) return 0;
  const std::uint64_t b = index_bits(dim_);
  const std::uint64_t f = bits_of(fpp_);
  const std::uint64_t t = budget;
  return scheme_ == CostScheme::Sparse ? t * (b + f) : f + t * b;
}

std::uint64_t CostModel::packets(std::size_t budget) const {
  const auto* p = std::get_if<PacketRegime>(&regime_);
  if (p == nullptr) throw NotApplicable("packets() requires the packet regime");
  if (budget == 0) return 0;
  const std::uint64_t t = budget;
  if (scheme_ == CostScheme::Sparse) return ceil_div(t, tau_max());
  const std::uint64_t b = index_bits(dim_);
  const std::uint64_t first = (p->pmax_bits - bits_of(fpp_)) / b;
  if (t <= first) return 1;
  return 1 + ceil_div(t - first, tau_max());
}

std::size_t CostModel::tau_max() const {
  const auto* p = std::get_if<PacketRegime>(&regime_);
  if (p == nullptr) throw NotApplicable("tau_max is defined for the packet regime only");
  const std::uint64_t b = index_bits(dim_);
  const std::uint64_t entry = scheme_ == CostScheme::Sparse ? b + bits_of(fpp_) : b;
  return static_cast<std::size_t>(p->pmax_bits / entry);
}

std::vector<std::size_t> CostModel::block_ends() const {
  if (!std::holds_alternative<PacketRegime>(regime_)) {
    throw NotApplicable("block_ends is defined for the packet regime only");
  }
  std::vector<std::size_t> ends;
  const std::size_t tau = tau_max();
  std::size_t t = 0;
  if (scheme_ == CostScheme::SQ) {
    const auto& p = std::get<PacketRegime>(regime_);
    t = static_cast<std::size_t>((p.pmax_bits - bits_of(fpp_)) / index_bits(dim_));
    if (t >= 1) ends.push_back(std::min(t, dim_));
  } else {
    t = tau;
    ends.push_back(std::min(t, dim_));
  }
  while (t < dim_) {
    t += tau;
    ends.push_back(std::min(t, dim_));
  }
  return ends;
}

double CostModel::scale(double units) const {
  return std::visit(overloaded{
                        [&](const PayloadRegime&) { return units; },
                        [&](const AffineRegime& a) { return a.c1 * units + a.c0; },
                        [&](const PacketRegime& p) { return p.c1 * units + p.c0; },
                    },
                    regime_);
}

double CostModel::cost(std::size_t budget) const {
  if (std::holds_alternative<PacketRegime>(regime_)) {
    return scale(static_cast<double>(packets(budget)));
  }
  return scale(static_cast<double>(payload_bits(budget)));
}

std::uint64_t CostModel::dense_payload_bits() const {
  return static_cast<std::uint64_t>(dim_) * bits_of(fpp_);
}

double CostModel::dense_cost() const {
  if (const auto* p = std::get_if<PacketRegime>(&regime_)) {
    const std::uint64_t per_packet = p->pmax_bits / bits_of(fpp_);
    return scale(static_cast<double>(ceil_div(dim_, per_packet)));
  }
  return scale(static_cast<double>(dense_payload_bits()));
}

CostModel CostSpec::bind(std::size_t dim, CostScheme default_scheme,
                         Precision default_fpp) const {
  return CostModel(regime, scheme.value_or(default_scheme), dim, fpp.value_or(default_fpp));
}

std::string CostSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const PayloadRegime&) { os << "payload"; },
                 [&](const AffineRegime& a) { os << "affine:c1=" << a.c1 << ",c0=" << a.c0; },
                 [&](const PacketRegime& p) {
                   os << "packet:c1=" << p.c1 << ",c0=" << p.c0 << ",pmax=" << p.pmax_bits;
                 },
             },
             regime);
  const bool has_params = !std::holds_alternative<PayloadRegime>(regime);
  char sep = has_params ? ',' : ':';
  if (scheme) {
    os << sep << "scheme=" << (*scheme == CostScheme::Sparse ? "sparse" : "sq");
    sep = ',';
  }
  if (fpp) os << sep << "fpp=" << bits_of(*fpp);
  return os.str();
}

namespace {

double parse_quantity(std::string_view key, std::string_view token) {
  std::string s(token);
  double mult = 1.0;
  if (!s.empty() && s.back() == 'B') {
    mult = 8.0;
    s.pop_back();
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ParseError("cost model: bad value '" + std::string(token) + "' for " + std::string(key));
  }
  return v * mult;
}

}  // namespace

CostSpec parse_cost_spec(std::string_view text) {
  CostSpec spec;
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view tail = colon == std::string_view::npos ? "" : text.substr(colon + 1);

  double c1 = 1.0, c0 = 0.0, pmax = -1.0;
  bool seen_c1 = false;
  std::size_t pos = 0;
  while (pos < tail.size()) {
    const auto comma = tail.find(',', pos);
    const std::string_view item = tail.substr(pos, comma - pos);
    pos = comma == std::string_view::npos ? tail.size() : comma + 1;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("cost model: expected key=value, got '" + std::string(item) + "'");
    }
    const std::string_view key = item.substr(0, eq);
    const std::string_view val = item.substr(eq + 1);
    if (key == "c1") {
      c1 = parse_quantity(key, val);
      seen_c1 = true;
    } else if (key == "c0") {
      c0 = parse_quantity(key, val);
    } else if (key == "pmax") {
      pmax = parse_quantity(key, val);
    } else if (key == "fpp") {
      spec.fpp = precision_from_bits(static_cast<int>(parse_quantity(key, val)));
    } else if (key == "scheme") {
      if (val == "sparse") {
        spec.scheme = CostScheme::Sparse;
      } else if (val == "sq") {
        spec.scheme = CostScheme::SQ;
      } else {
        throw ParseError("cost model: unknown scheme '" + std::string(val) + "'");
      }
    } else {
      throw ParseError("cost model: unknown key '" + std::string(key) + "'");
    }
  }

  if (head == "payload" || head == "payload-sparse" || head == "payload-sq") {
    if (head == "payload-sparse") spec.scheme = CostScheme::Sparse;
    if (head == "payload-sq") spec.scheme = CostScheme::SQ;
    spec.regime = PayloadRegime{};
  } else if (head == "affine") {
    spec.regime = AffineRegime{c1, c0};
  } else if (head == "packet") {
    if (!seen_c1 || pmax <= 0.0) throw ParseError("packet cost model needs c1 and pmax");
    if (pmax != std::floor(pmax)) throw ParseError("packet pmax must be a whole number of bits");
    spec.regime = PacketRegime{c1, c0, static_cast<std::uint64_t>(pmax)};
  } else {
    throw ParseError("cost model: unknown regime '" + std::string(head) + "'");
  }
  return spec;
}

}  // namespace catgrad
