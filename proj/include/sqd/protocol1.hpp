#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sqd/channel.hpp"
#include "sqd/party.hpp"

namespace sqd {

// First dialogue protocol: quantum Alice and a measurement-capable classical
// Bob exchange N bits each over 8N single photons.
//
// Phases of a run, with the quantum legs named as they appear in transcripts:
//   1. Alice sends 8N random photons           (leg "alice_to_bob")
//   2. Bob returns a random half, each photon either reflected or Z-measured
//      and resent; Alice checks them            (leg "check_return")
//   3. Alice discloses which kept photons were Z-prepared
//   4. Bob encodes N message carriers (measure, refresh as |delta^b>),
//      shuffles everything he holds, returns it (leg "encoded_return")
//   5. Bob discloses the order; Alice checks the untouched samples
//   6. Alice encodes with I/sigma_x, Z-measures, announces the final bits;
//      both sides decode via final = initial ^ b ^ a.

struct Protocol1Config {
  std::size_t n = 1;
  double check_threshold = 0.05;
  std::uint64_t seed = 0;
};

struct CheckStats {
  std::size_t compared = 0;
  std::size_t errors = 0;

  double rate() const {
    return compared == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(compared);
  }
};

// The return-leg check keeps reflected and measured photons separate so the
// two disturbance signatures can be reported (and tested) independently.
struct ReturnCheckStats {
  std::size_t reflected_compared = 0;
  std::size_t reflected_errors = 0;
  std::size_t zmeasured_compared = 0;
  std::size_t zmeasured_errors = 0;

  std::size_t compared() const { return reflected_compared + zmeasured_compared; }
  std::size_t errors() const { return reflected_errors + zmeasured_errors; }
  double rate() const {
    return compared() == 0 ? 0.0
                           : static_cast<double>(errors()) / static_cast<double>(compared());
  }
};

enum class Protocol1Abort : std::uint8_t { ReturnCheck, SampleCheck };

inline std::string to_string(Protocol1Abort a) {
  return a == Protocol1Abort::ReturnCheck ? "return_check" : "sample_check";
}

// Message-bearing resources consumed by a completed run, check overhead
// excluded. Feeds the efficiency cross-check.
struct ResourceCounts {
  std::size_t message_qubits = 0;
  std::size_t classical_message_bits = 0;
  std::size_t secret_bits = 0;
};

struct Protocol1Outcome {
  std::optional<Protocol1Abort> aborted_at;
  ReturnCheckStats return_check;
  CheckStats sample_check;
  BitString alice_decoded;  // Alice's reading of Bob's message (empty if aborted)
  BitString bob_decoded;    // Bob's reading of Alice's message
  Transcript transcript;
  std::vector<ClassicalOp> bob_ops;
  KnowledgeRecord eve_knowledge;
  ResourceCounts resources;
};

struct CheckChoice {
  std::size_t position = 0;
  bool measured = false;
  Bit result;  // meaningful only when measured
};

struct BobCheckResult {
  std::vector<CheckChoice> choices;      // ascending by position
  PhotonBlock returned;                  // photons in the same order as choices
  std::vector<std::size_t> kept_positions;  // ascending
};

// Bob picks half of the received block; each chosen photon is reflected
// untouched or Z-measured and resent in the state he found.
inline BobCheckResult bob_check_phase(const PhotonBlock& received, ClassicalParty& bob) {
  const std::size_t total = received.size();
  const std::size_t half = total / 2;
  Rng& rng = bob.rng();

  BobCheckResult out;
  std::vector<std::size_t> chosen = rng.sample_indices(total, half);
  std::set<std::size_t> chosen_set(chosen.begin(), chosen.end());

  out.returned.origin = Party::Bob;
  for (std::size_t pos : chosen) {
    CheckChoice choice;
    choice.position = pos;
    choice.measured = rng.coin();
    if (choice.measured) {
      choice.result = bob.measure_z(received.photons[pos]);
      out.returned.photons.push_back(bob.prepare_z(choice.result));
    } else {
      out.returned.photons.push_back(bob.reflect(received.photons[pos]));
    }
    out.choices.push_back(choice);
  }
  for (std::size_t pos = 0; pos < total; ++pos) {
    if (!chosen_set.count(pos)) out.kept_positions.push_back(pos);
  }
  return out;
}

// Alice's check on the returned half. Reflected photons are remeasured in
// their preparation basis; photons she prepared in Z and Bob measured are
// checked against both his announced result and her own Z remeasurement.
// X-prepared photons Bob measured carry no comparable expectation and are
// left out of the denominator.
inline ReturnCheckStats alice_return_check(const std::vector<PhotonState>& prepared,
                                           const std::vector<CheckChoice>& choices,
                                           const PhotonBlock& returned, Rng& rng) {
  if (choices.size() != returned.size()) {
    throw ProtocolError("returned block does not match Bob's disclosed choices");
  }
  ReturnCheckStats stats;
  for (std::size_t k = 0; k < choices.size(); ++k) {
    const auto& choice = choices[k];
    const PhotonState& prep = prepared.at(choice.position);
    const PhotonState& photon = returned.photons[k];
    if (!choice.measured) {
      Bit outcome = measure(photon, prep.basis, rng).outcome;
      stats.reflected_compared++;
      if (outcome != prep.bit) stats.reflected_errors++;
    } else if (prep.basis == Basis::Z) {
      Bit outcome = measure(photon, Basis::Z, rng).outcome;
      stats.zmeasured_compared++;
      if (choice.result != prep.bit || outcome != prep.bit) stats.zmeasured_errors++;
    }
  }
  return stats;
}

struct BobEncodeResult {
  Bit initial_bit;
  PhotonState fresh;
};

// Measure the carrier in Z (learning its initial bit), refresh it as
// |delta ^ b>.
inline BobEncodeResult bob_encode_message(PhotonState photon, Bit b, ClassicalParty& bob) {
  Bit delta = bob.measure_z(photon);
  return {delta, bob.prepare_z(delta ^ b)};
}

// Apply I (a=0) or sigma_x (a=1), then measure in Z. The returned bit is what
// Alice announces for this carrier.
inline Bit alice_encode_and_measure(PhotonState photon, Bit a, Rng& rng) {
  PhotonState encoded = apply_pauli(photon, a.value() ? Pauli::X : Pauli::I);
  return measure(encoded, Basis::Z, rng).outcome;
}

// final = initial ^ b ^ a, so either party recovers the other's bit from the
// announced final state, the initial bit it knows, and its own bit.
inline Bit decode(Bit final_bit, Bit known_initial, Bit own_bit) {
  return final_bit ^ known_initial ^ own_bit;
}

inline void validate(const Protocol1Config& cfg) {
  if (cfg.n < 1) throw ConfigError("n must be at least 1");
  if (cfg.check_threshold < 0.0 || cfg.check_threshold >= 1.0) {
    throw ConfigError("check_threshold must be in [0, 1)");
  }
}

inline Protocol1Outcome run_protocol1(const Protocol1Config& cfg, const BitString& msg_alice,
                                      const BitString& msg_bob, Adversary eve) {
  validate(cfg);
  if (msg_alice.size() != cfg.n || msg_bob.size() != cfg.n) {
    throw ConfigError("message lengths must equal n");
  }

  const std::size_t n = cfg.n;
  const std::size_t total = 8 * n;

  Rng rng(cfg.seed);
  Protocol1Outcome out;
  Channel ch(out.transcript, eve, rng);
  ClassicalParty bob(rng);

  auto finish = [&](std::optional<Protocol1Abort> abort) {
    out.aborted_at = abort;
    out.bob_ops = bob.take_log();
    out.eve_knowledge = eve.take_knowledge();
    return std::move(out);
  };

  ch.announce(Party::Alice, "session_parameters",
              {{"protocol", 1}, {"n", n}, {"check_threshold", cfg.check_threshold}});

  // Phase 1: block transmission of 8N random photons.
  std::vector<PhotonState> prepared(total);
  for (auto& p : prepared) p = random_state(rng);
  PhotonBlock at_bob =
      ch.send_block("alice_to_bob", Party::Alice, Party::Bob, {prepared, Party::Alice});

  // Phase 2: reflect-or-measure check on a random half.
  BobCheckResult check = bob_check_phase(at_bob, bob);
  bob.mark_send();
  PhotonBlock returned =
      ch.send_block("check_return", Party::Bob, Party::Alice, std::move(check.returned));
  ch.announce(Party::Alice, "receipt", {{"leg", "check_return"}, {"photons", returned.size()}});

  {
    json positions = json::array();
    json measured = json::array();
    json results = json::array();
    for (const auto& c : check.choices) {
      positions.push_back(c.position);
      measured.push_back(c.measured);
      if (c.measured) {
        results.push_back(c.result.value());
      } else {
        results.push_back(nullptr);
      }
    }
    bob.mark_announce();
    ch.announce(Party::Bob, "check_disclosure",
                {{"positions", positions}, {"measured", measured}, {"results", results}});
  }

  out.return_check = alice_return_check(prepared, check.choices, returned, rng);
  const bool abort2 = out.return_check.rate() >= cfg.check_threshold;
  ch.announce(Party::Alice, "return_check",
              {{"compared", out.return_check.compared()},
               {"errors", out.return_check.errors()},
               {"reflected_compared", out.return_check.reflected_compared},
               {"reflected_errors", out.return_check.reflected_errors},
               {"zmeasured_compared", out.return_check.zmeasured_compared},
               {"zmeasured_errors", out.return_check.zmeasured_errors},
               {"error_rate", out.return_check.rate()},
               {"abort", abort2}});
  if (abort2) return finish(Protocol1Abort::ReturnCheck);

  // Phase 3: Alice discloses which kept photons were Z-prepared.
  std::vector<std::size_t> z_kept;
  for (std::size_t pos : check.kept_positions) {
    if (prepared[pos].basis == Basis::Z) z_kept.push_back(pos);
  }
  ch.announce(Party::Alice, "z_positions", {{"positions", z_kept}});
  if (z_kept.size() < n) {
    throw InsufficientZPhotons("only " + std::to_string(z_kept.size()) +
                               " Z-basis photons remain for " + std::to_string(n) +
                               " message bits");
  }

  // Phase 4: Bob encodes N carriers and shuffles everything he holds.
  std::vector<std::size_t> message_positions;
  {
    std::vector<std::size_t> picks = rng.sample_indices(z_kept.size(), n);
    for (std::size_t i : picks) message_positions.push_back(z_kept[i]);
  }
  std::set<std::size_t> message_set(message_positions.begin(), message_positions.end());

  BitString bob_initial_bits(n);
  std::vector<PhotonState> held;
  held.reserve(check.kept_positions.size());
  {
    std::vector<PhotonState> fresh(n);
    for (std::size_t k = 0; k < n; ++k) {
      auto enc = bob_encode_message(at_bob.photons[message_positions[k]], msg_bob[k], bob);
      bob_initial_bits[k] = enc.initial_bit;
      fresh[k] = enc.fresh;
    }
    for (std::size_t pos : check.kept_positions) {
      if (message_set.count(pos)) {
        auto it = std::find(message_positions.begin(), message_positions.end(), pos);
        held.push_back(fresh[static_cast<std::size_t>(it - message_positions.begin())]);
      } else {
        held.push_back(at_bob.photons[pos]);
      }
    }
  }

  Permutation perm = bob.reorder(held.size());
  bob.mark_send();
  PhotonBlock sent = ch.send_block("encoded_return", Party::Bob, Party::Alice,
                                   {perm.permute(held), Party::Bob});
  ch.announce(Party::Alice, "receipt", {{"leg", "encoded_return"}, {"photons", sent.size()}});
  bob.mark_announce();
  ch.announce(Party::Bob, "order_disclosure",
              {{"permutation", perm.mapping()}, {"message_positions", message_positions}});

  // Phase 5: sample check on the untouched photons.
  std::vector<PhotonState> restored = perm.unpermute(sent.photons);
  for (std::size_t i = 0; i < check.kept_positions.size(); ++i) {
    std::size_t pos = check.kept_positions[i];
    if (message_set.count(pos)) continue;
    Bit outcome = measure(restored[i], prepared[pos].basis, rng).outcome;
    out.sample_check.compared++;
    if (outcome != prepared[pos].bit) out.sample_check.errors++;
  }
  const bool abort5 = out.sample_check.rate() >= cfg.check_threshold;
  ch.announce(Party::Alice, "sample_check",
              {{"compared", out.sample_check.compared},
               {"errors", out.sample_check.errors},
               {"error_rate", out.sample_check.rate()},
               {"abort", abort5}});
  if (abort5) return finish(Protocol1Abort::SampleCheck);

  // Phase 6: Alice encodes, measures, announces; both sides decode.
  BitString final_bits(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto it = std::find(check.kept_positions.begin(), check.kept_positions.end(),
                        message_positions[k]);
    std::size_t held_index = static_cast<std::size_t>(it - check.kept_positions.begin());
    final_bits[k] = alice_encode_and_measure(restored[held_index], msg_alice[k], rng);
  }
  ch.announce(Party::Alice, "final_bits", {{"bits", to_string(final_bits)}});

  out.alice_decoded.resize(n);
  out.bob_decoded.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    Bit alice_initial = prepared[message_positions[k]].bit;
    out.alice_decoded[k] = decode(final_bits[k], alice_initial, msg_alice[k]);
    out.bob_decoded[k] = decode(final_bits[k], bob_initial_bits[k], msg_bob[k]);
  }

  out.resources.message_qubits = 2 * n;  // N carriers + N fresh replacements
  out.resources.classical_message_bits = n;
  out.resources.secret_bits = 2 * n;
  return finish(std::nullopt);
}

// The encode/announce/decode algebra alone, on carriers with forced initial
// states and no check machinery. Used by the golden tests and the CLI.
struct DialoguePipeline1 {
  std::vector<PhotonState> after_bob;
  std::vector<PhotonState> after_alice;
  BitString final_bits;
  BitString alice_decoded;
  BitString bob_decoded;
};

inline DialoguePipeline1 run_message_pipeline1(const std::vector<PhotonState>& carriers,
                                               const BitString& msg_alice,
                                               const BitString& msg_bob) {
  const std::size_t n = carriers.size();
  if (msg_alice.size() != n || msg_bob.size() != n) {
    throw ConfigError("message lengths must equal the carrier count");
  }
  for (const auto& c : carriers) {
    if (c.basis != Basis::Z) throw ConfigError("message carriers must be Z-basis states");
  }

  Rng rng(0);  // never consulted: every measurement below is matched-basis
  ClassicalParty bob(rng);
  DialoguePipeline1 out;
  BitString initial(n), finals(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto enc = bob_encode_message(carriers[i], msg_bob[i], bob);
    initial[i] = enc.initial_bit;
    out.after_bob.push_back(enc.fresh);
  }
  for (std::size_t i = 0; i < n; ++i) {
    PhotonState encoded =
        apply_pauli(out.after_bob[i], msg_alice[i].value() ? Pauli::X : Pauli::I);
    out.after_alice.push_back(encoded);
    finals[i] = measure(encoded, Basis::Z, rng).outcome;
  }
  out.final_bits = finals;
  out.alice_decoded.resize(n);
  out.bob_decoded.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.alice_decoded[i] = decode(finals[i], carriers[i].bit, msg_alice[i]);
    out.bob_decoded[i] = decode(finals[i], initial[i], msg_bob[i]);
  }
  return out;
}

}  // namespace sqd
