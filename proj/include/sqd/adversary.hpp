#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sqd/qubit.hpp"
#include "sqd/transcript.hpp"

namespace sqd {

enum class BasisPolicy : std::uint8_t { AlwaysZ, AlwaysX, UniformRandom };

inline std::string to_string(BasisPolicy p) {
  switch (p) {
    case BasisPolicy::AlwaysZ: return "z";
    case BasisPolicy::AlwaysX: return "x";
    case BasisPolicy::UniformRandom: return "random";
  }
  return "?";
}

// One in-transit measurement Eve made: which leg, which position in the
// block, which basis, what she saw.
struct ObservedMeasurement {
  std::string leg;
  std::size_t position = 0;
  Basis basis = Basis::Z;
  Bit outcome;
};

// Append-only record of everything Eve has learned. Leakage audits query it
// together with the public transcript.
struct KnowledgeRecord {
  std::vector<ObservedMeasurement> measurements;
  std::vector<std::size_t> announcements_read;  // transcript sequence numbers
  std::vector<std::pair<std::string, std::vector<PhotonState>>> captured_blocks;
};

// An outside eavesdropper: a transform applied to photon blocks in transit,
// plus read access to every classical announcement. A strategy instance
// belongs to exactly one run.
class Adversary {
 public:
  enum class Kind : std::uint8_t {
    Passive,
    InterceptResend,
    MeasureResend,
    FakeStateInjection,
  };

  static Adversary passive() { return Adversary(Kind::Passive); }

  static Adversary intercept_resend(BasisPolicy policy, std::set<std::string> legs = {}) {
    Adversary a(Kind::InterceptResend);
    a.policy_ = policy;
    a.legs_ = std::move(legs);
    return a;
  }

  static Adversary measure_resend(Basis basis, std::set<std::string> legs = {}) {
    Adversary a(Kind::MeasureResend);
    a.fixed_basis_ = basis;
    a.legs_ = std::move(legs);
    return a;
  }

  static Adversary fake_state_injection(PhotonState state, std::set<std::string> legs = {}) {
    Adversary a(Kind::FakeStateInjection);
    a.fake_state_ = state;
    a.legs_ = std::move(legs);
    return a;
  }

  // Textual form used by the CLI and experiment configs, e.g.
  //   passive
  //   intercept_resend:random
  //   intercept_resend:z:legs=alice_to_bob
  //   measure_resend:x
  //   fake_state_injection:0:legs=bob_to_alice
  static Adversary parse(std::string_view spec);

  // Empty leg set means every transmission is attacked.
  bool targets(const std::string& leg) const {
    return legs_.empty() || legs_.count(leg) > 0;
  }

  PhotonBlock apply(const std::string& leg, PhotonBlock block, Rng& rng) {
    if (kind_ == Kind::Passive || !targets(leg)) return block;
    switch (kind_) {
      case Kind::InterceptResend:
      case Kind::MeasureResend:
        for (std::size_t i = 0; i < block.photons.size(); ++i) {
          Basis b = pick_basis(rng);
          auto [outcome, collapsed] = measure(block.photons[i], b, rng);
          knowledge_.measurements.push_back({leg, i, b, outcome});
          block.photons[i] = collapsed;
        }
        return block;
      case Kind::FakeStateInjection: {
        knowledge_.captured_blocks.emplace_back(leg, block.photons);
        for (auto& p : block.photons) p = fake_state_;
        return block;
      }
      default:
        return block;
    }
  }

  void observe_announcement(std::size_t seq) {
    knowledge_.announcements_read.push_back(seq);
  }

  Kind kind() const { return kind_; }
  const KnowledgeRecord& knowledge() const { return knowledge_; }
  KnowledgeRecord take_knowledge() { return std::move(knowledge_); }

  std::string describe() const {
    std::string s = action_name();
    if (!legs_.empty()) {
      s += ":legs=";
      bool first = true;
      for (const auto& l : legs_) {
        if (!first) s += ',';
        s += l;
        first = false;
      }
    }
    return s;
  }

  // What happened to this particular transmission (for the block event log).
  std::string action_note(const std::string& leg) const {
    if (kind_ == Kind::Passive || !targets(leg)) return "passive";
    return action_name();
  }

 private:
  explicit Adversary(Kind kind) : kind_(kind) {}

  Basis pick_basis(Rng& rng) {
    if (kind_ == Kind::MeasureResend) return fixed_basis_;
    switch (policy_) {
      case BasisPolicy::AlwaysZ: return Basis::Z;
      case BasisPolicy::AlwaysX: return Basis::X;
      case BasisPolicy::UniformRandom: return rng.coin() ? Basis::X : Basis::Z;
    }
    return Basis::Z;
  }

  std::string action_name() const {
    switch (kind_) {
      case Kind::Passive: return "passive";
      case Kind::InterceptResend: return "intercept_resend(" + to_string(policy_) + ")";
      case Kind::MeasureResend: return "measure_resend(" + to_string(fixed_basis_) + ")";
      case Kind::FakeStateInjection: return "fake_state_injection(" + to_string(fake_state_) + ")";
    }
    return "?";
  }

  Kind kind_;
  BasisPolicy policy_ = BasisPolicy::UniformRandom;
  Basis fixed_basis_ = Basis::Z;
  PhotonState fake_state_ = kKet0;
  std::set<std::string> legs_;
  KnowledgeRecord knowledge_;
};

namespace detail {

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

}  // namespace detail

inline Adversary Adversary::parse(std::string_view spec) {
  auto tokens = detail::split(spec, ':');
  if (tokens.empty() || tokens[0].empty()) {
    throw ConfigError("empty adversary spec");
  }
  const std::string& name = tokens[0];

  std::set<std::string> legs;
  std::optional<std::string> param;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i].rfind("legs=", 0) == 0) {
      for (auto& l : detail::split(tokens[i].substr(5), ',')) {
        if (!l.empty()) legs.insert(l);
      }
    } else if (!param) {
      param = tokens[i];
    } else {
      throw ConfigError("too many parameters in adversary spec: " + std::string(spec));
    }
  }

  auto basis_policy = [&](std::string_view def) {
    std::string_view p = param ? std::string_view(*param) : def;
    if (p == "z") return BasisPolicy::AlwaysZ;
    if (p == "x") return BasisPolicy::AlwaysX;
    if (p == "random") return BasisPolicy::UniformRandom;
    throw ConfigError("unknown basis policy: " + std::string(p));
  };

  if (name == "passive") {
    if (param || !legs.empty()) throw ConfigError("passive takes no parameters");
    return passive();
  }
  if (name == "intercept_resend" || name == "intercept") {
    return intercept_resend(basis_policy("random"), std::move(legs));
  }
  if (name == "measure_resend") {
    BasisPolicy p = basis_policy("z");
    if (p == BasisPolicy::UniformRandom) {
      throw ConfigError("measure_resend requires a fixed basis (z or x)");
    }
    return measure_resend(p == BasisPolicy::AlwaysZ ? Basis::Z : Basis::X, std::move(legs));
  }
  if (name == "fake_state_injection" || name == "fake") {
    PhotonState st = kKet0;
    if (param) {
      try {
        st = parse_photon_state(*param);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    return fake_state_injection(st, std::move(legs));
  }
  throw ConfigError("unknown adversary: " + name);
}

// ---------------------------------------------------------------------------
// Message hypothesis enumeration.
//
// Both protocols announce, per message position, a single public bit that
// satisfies   announced = delta ^ a ^ b
// where a and b are the two parties' secret bits and delta is a hidden
// uniformly random bit (the carrier's initial Z value in protocol 1, the
// first photon of the pair in protocol 2). An observer's hypothesis set for
// (a, b) is whatever survives that relation plus any side knowledge of delta
// or of the encoded bit delta^b.

struct PositionHypotheses {
  // Index is alice_bit*2 + bob_bit.
  std::array<bool, 4> consistent{};

  int count() const {
    int c = 0;
    for (bool ok : consistent) c += ok ? 1 : 0;
    return c;
  }

  double entropy_bits() const {
    int c = count();
    return c > 0 ? std::log2(static_cast<double>(c)) : 0.0;
  }
};

namespace detail {

struct XorConstraints {
  std::optional<Bit> delta;        // initial / first-photon bit
  std::optional<Bit> delta_xor_b;  // encoded / second-photon bit
};

inline bool pair_consistent(Bit announced, Bit a, Bit b, const XorConstraints& c) {
  for (unsigned d = 0; d < 2; ++d) {
    Bit delta(d);
    if (announced != (delta ^ a ^ b)) continue;
    if (c.delta && *c.delta != delta) continue;
    if (c.delta_xor_b && *c.delta_xor_b != (delta ^ b)) continue;
    return true;
  }
  return false;
}

inline std::optional<std::size_t> index_of(const std::vector<std::size_t>& v, std::size_t x) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == x) return i;
  }
  return std::nullopt;
}

}  // namespace detail

// Per message position, the set of (alice_bit, bob_bit) pairs consistent with
// the public transcript plus Eve's own measurement record. Call with an empty
// KnowledgeRecord to get the pure outside-observer view.
inline std::vector<PositionHypotheses> guess_messages(const KnowledgeRecord& knowledge,
                                                      const Transcript& transcript) {
  const Announcement* session = transcript.find("session_parameters");
  if (!session) throw ProtocolError("transcript has no session_parameters announcement");
  const int protocol = session->payload.at("protocol").get<int>();

  const char* final_label = protocol == 1 ? "final_bits" : "ciphertexts";
  const Announcement* final_ann = transcript.find(final_label);
  if (!final_ann) {
    throw ProtocolError(std::string("transcript has no ") + final_label +
                        " announcement; the run did not complete");
  }
  const BitString announced = parse_bits(final_ann->payload.at("bits").get<std::string>());
  const std::size_t n = announced.size();

  std::vector<detail::XorConstraints> constraints(n);

  // Test hook: bits pushed into the public view on purpose, to show the
  // auditor reacts when the hidden pad is exposed.
  if (const Announcement* leak = transcript.find("leaked_initial_bits")) {
    BitString bits = parse_bits(leak->payload.at("bits").get<std::string>());
    for (std::size_t i = 0; i < n && i < bits.size(); ++i) {
      constraints[i].delta = bits[i];
    }
  }

  if (protocol == 1) {
    // Map Eve's raw in-transit observations onto message positions using the
    // later public disclosures.
    std::vector<std::size_t> message_positions;
    std::vector<std::size_t> sent_slot_to_position;  // slot in encoded block -> original index
    if (const Announcement* order = transcript.find("order_disclosure")) {
      message_positions = order->payload.at("message_positions").get<std::vector<std::size_t>>();
      if (const Announcement* check = transcript.find("check_disclosure")) {
        auto checked = check->payload.at("positions").get<std::vector<std::size_t>>();
        std::set<std::size_t> checked_set(checked.begin(), checked.end());
        const std::size_t total = session->payload.at("n").get<std::size_t>() * 8;
        std::vector<std::size_t> kept;
        for (std::size_t p = 0; p < total; ++p) {
          if (!checked_set.count(p)) kept.push_back(p);
        }
        auto perm = order->payload.at("permutation").get<std::vector<std::size_t>>();
        sent_slot_to_position.assign(perm.size(), 0);
        for (std::size_t i = 0; i < perm.size() && i < kept.size(); ++i) {
          sent_slot_to_position[perm[i]] = kept[i];
        }
      }
    }
    for (const auto& obs : knowledge.measurements) {
      if (obs.basis != Basis::Z) continue;  // an X result says nothing about a Z bit
      if (obs.leg == "alice_to_bob") {
        if (auto j = detail::index_of(message_positions, obs.position)) {
          constraints[*j].delta = obs.outcome;
        }
      } else if (obs.leg == "encoded_return" && obs.position < sent_slot_to_position.size()) {
        std::size_t original = sent_slot_to_position[obs.position];
        if (auto j = detail::index_of(message_positions, original)) {
          constraints[*j].delta_xor_b = obs.outcome;
        }
      }
    }
  } else {
    std::vector<std::size_t> message_slots;
    if (const Announcement* phi = transcript.find("phi_disclosure")) {
      message_slots = phi->payload.at("message_slots").get<std::vector<std::size_t>>();
    }
    for (const auto& obs : knowledge.measurements) {
      if (obs.basis != Basis::Z || obs.leg != "bob_to_alice") continue;
      if (auto k = detail::index_of(message_slots, obs.position)) {
        if (*k / 2 >= n) continue;
        if (*k % 2 == 0) {
          constraints[*k / 2].delta = obs.outcome;
        } else {
          constraints[*k / 2].delta_xor_b = obs.outcome;
        }
      }
    }
  }

  std::vector<PositionHypotheses> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (unsigned a = 0; a < 2; ++a) {
      for (unsigned b = 0; b < 2; ++b) {
        out[i].consistent[a * 2 + b] =
            detail::pair_consistent(announced[i], Bit(a), Bit(b), constraints[i]);
      }
    }
  }
  return out;
}

}  // namespace sqd
