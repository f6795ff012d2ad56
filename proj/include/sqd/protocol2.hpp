#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sqd/channel.hpp"
#include "sqd/party.hpp"
#include "sqd/protocol1.hpp"  // CheckStats, ResourceCounts

namespace sqd {

// Second dialogue protocol: Bob never measures anything. He encodes each
// message bit as a same/opposite pair of adjacent Z photons, hides the pairs
// among samples and Alice's own photons under one uniform shuffle, and the
// dialogue closes with Alice's one-time-pad ciphertext c = a ^ theta, keyed
// by the second photon of each pair.
//
// Block legs: "alice_to_bob" (N photons out), "bob_to_alice" (the combined
// shuffled block of 5N+M photons back).
//
// The returned block is split by later announcements into:
//   phi: 2N message photons + 2N of Bob's samples (decoys for the pairs)
//   psi: Alice's N originals (CTRL) + the other M samples (SIFT), checked
//        via random Z/X measurements before any message handling.

struct Protocol2Config {
  std::size_t n = 1;
  std::size_t m = 1;  // extra sample count, m >= n
  double p_ctrl = 0.05;
  double p_zsift = 0.05;
  std::uint64_t seed = 0;
};

enum class Protocol2Abort : std::uint8_t { Ctrl, Zsift };

inline std::string to_string(Protocol2Abort a) {
  return a == Protocol2Abort::Ctrl ? "ctrl_check" : "zsift_check";
}

// One encoded message bit: b = first ^ second always.
struct MessagePair {
  Bit first;
  Bit second;
  Bit b;
};

inline std::vector<MessagePair> make_pairs(const BitString& msg, const BitString& deltas) {
  if (deltas.size() != msg.size()) {
    throw ConfigError("one pad bit is required per message bit");
  }
  std::vector<MessagePair> pairs(msg.size());
  for (std::size_t i = 0; i < msg.size(); ++i) {
    pairs[i] = {deltas[i], deltas[i] ^ msg[i], msg[i]};
  }
  return pairs;
}

struct PreparedPairs {
  std::vector<MessagePair> pairs;
  std::vector<PhotonState> photons;  // 2N, pair order
};

// Draw one uniform pad bit per message bit and prepare the adjacent photons.
inline PreparedPairs bob_prepare_pairs(const BitString& msg, ClassicalParty& bob) {
  BitString deltas = random_bits(msg.size(), bob.rng());
  PreparedPairs out;
  out.pairs = make_pairs(msg, deltas);
  out.photons.reserve(2 * msg.size());
  for (const auto& p : out.pairs) {
    out.photons.push_back(bob.prepare_z(p.first));
    out.photons.push_back(bob.prepare_z(p.second));
  }
  return out;
}

// Bob's private bookkeeping for the shuffled outgoing block.
struct ComposedBlock {
  PhotonBlock outgoing;
  Permutation perm = Permutation::identity(0);
  std::vector<std::size_t> message_slots;      // 2N, pair order
  std::vector<std::size_t> phi_sample_slots;   // 2N
  std::vector<std::size_t> psi_order_slots;    // N CTRL slots then M SIFT slots
  std::vector<std::size_t> psi_slots_sorted;   // the announced position set
  std::vector<std::size_t> sift_sample_index;  // SIFT j -> index into the sample list
};

// Compose phi and psi and hide everything under one uniform permutation of
// the whole block, so nothing in transit reveals which photons carry
// messages, which are decoys, and which came from Alice.
inline ComposedBlock compose_and_shuffle(const std::vector<PhotonState>& message_photons,
                                         const std::vector<PhotonState>& samples,
                                         const PhotonBlock& from_alice, ClassicalParty& bob) {
  const std::size_t two_n = message_photons.size();
  if (two_n % 2 != 0) throw ConfigError("message photons must come in pairs");
  const std::size_t n = two_n / 2;
  if (from_alice.size() != n) throw ConfigError("expected one photon from Alice per pair");
  if (samples.size() < 2 * n + n) throw ConfigError("not enough sample photons");
  const std::size_t m = samples.size() - 2 * n;

  Rng& rng = bob.rng();
  ComposedBlock out;

  std::vector<std::size_t> phi_sample_idx = rng.sample_indices(samples.size(), 2 * n);
  std::vector<bool> in_phi(samples.size(), false);
  for (std::size_t i : phi_sample_idx) in_phi[i] = true;

  std::vector<PhotonState> constructed;
  constructed.reserve(5 * n + m);
  constructed.insert(constructed.end(), message_photons.begin(), message_photons.end());
  for (std::size_t i : phi_sample_idx) constructed.push_back(samples[i]);
  constructed.insert(constructed.end(), from_alice.photons.begin(), from_alice.photons.end());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!in_phi[i]) {
      constructed.push_back(samples[i]);
      out.sift_sample_index.push_back(i);
    }
  }

  out.perm = bob.reorder(constructed.size());
  out.outgoing = {out.perm.permute(constructed), Party::Bob};

  for (std::size_t k = 0; k < two_n; ++k) out.message_slots.push_back(out.perm.apply(k));
  for (std::size_t j = 0; j < two_n; ++j) {
    out.phi_sample_slots.push_back(out.perm.apply(two_n + j));
  }
  for (std::size_t k = 0; k < n; ++k) {
    out.psi_order_slots.push_back(out.perm.apply(2 * two_n + k));
  }
  for (std::size_t j = 0; j < m; ++j) {
    out.psi_order_slots.push_back(out.perm.apply(2 * two_n + n + j));
  }
  out.psi_slots_sorted = out.psi_order_slots;
  std::sort(out.psi_slots_sorted.begin(), out.psi_slots_sorted.end());
  return out;
}

struct PsiMeasurement {
  std::size_t slot = 0;
  Basis basis = Basis::Z;
  Bit outcome;
};

// Alice measures every announced psi photon in a fresh uniform basis.
inline std::vector<PsiMeasurement> alice_psi_measurements(const PhotonBlock& block,
                                                          const std::vector<std::size_t>& psi_slots,
                                                          Rng& rng) {
  std::vector<PsiMeasurement> out;
  out.reserve(psi_slots.size());
  for (std::size_t slot : psi_slots) {
    Basis basis = rng.coin() ? Basis::X : Basis::Z;
    Bit outcome = measure(block.photons.at(slot), basis, rng).outcome;
    out.push_back({slot, basis, outcome});
  }
  return out;
}

// Error rate over CTRL photons Alice happened to measure in their preparation
// basis; a mismatched basis gives a legitimately random outcome and is not a
// comparison.
inline CheckStats ctrl_check(const std::vector<PhotonState>& alice_prepared,
                             const std::vector<std::size_t>& psi_order_slots,
                             const std::vector<PsiMeasurement>& measurements) {
  std::map<std::size_t, const PsiMeasurement*> by_slot;
  for (const auto& meas : measurements) by_slot[meas.slot] = &meas;

  CheckStats stats;
  for (std::size_t k = 0; k < alice_prepared.size(); ++k) {
    auto it = by_slot.find(psi_order_slots.at(k));
    if (it == by_slot.end()) throw ProtocolError("CTRL slot was never measured");
    const PsiMeasurement& meas = *it->second;
    if (meas.basis != alice_prepared[k].basis) continue;
    stats.compared++;
    if (meas.outcome != alice_prepared[k].bit) stats.errors++;
  }
  return stats;
}

// Bob's side of the SIFT check: announced Z values against his preparations.
inline CheckStats zsift_check(const std::vector<std::pair<std::size_t, Bit>>& announced,
                              const std::map<std::size_t, Bit>& prepared_by_slot) {
  CheckStats stats;
  for (const auto& [slot, value] : announced) {
    auto it = prepared_by_slot.find(slot);
    if (it == prepared_by_slot.end()) throw ProtocolError("announced slot is not a SIFT photon");
    stats.compared++;
    if (value != it->second) stats.errors++;
  }
  return stats;
}

struct DecodeEncryptResult {
  BitString bob_message;  // read from pair parity
  BitString ciphertexts;  // c_i = a_i ^ theta_i, theta = second photon's bit
};

// Alice Z-measures the restored pairs, reads Bob's bits from same/opposite,
// and pads her own bits with the second photon of each pair.
inline DecodeEncryptResult alice_decode_and_encrypt(const std::vector<PhotonState>& pairs_in_order,
                                                    const BitString& msg_alice, Rng& rng) {
  if (pairs_in_order.size() != 2 * msg_alice.size()) {
    throw ProtocolError("expected two message photons per message bit");
  }
  DecodeEncryptResult out;
  out.bob_message.resize(msg_alice.size());
  out.ciphertexts.resize(msg_alice.size());
  for (std::size_t i = 0; i < msg_alice.size(); ++i) {
    Bit first = measure(pairs_in_order[2 * i], Basis::Z, rng).outcome;
    Bit second = measure(pairs_in_order[2 * i + 1], Basis::Z, rng).outcome;
    out.bob_message[i] = first ^ second;
    out.ciphertexts[i] = msg_alice[i] ^ second;
  }
  return out;
}

inline BitString bob_decrypt(const BitString& ciphertexts, const std::vector<MessagePair>& pairs) {
  if (ciphertexts.size() != pairs.size()) {
    throw ProtocolError("ciphertext length does not match the prepared pairs");
  }
  BitString out(ciphertexts.size());
  for (std::size_t i = 0; i < ciphertexts.size(); ++i) {
    out[i] = ciphertexts[i] ^ pairs[i].second;
  }
  return out;
}

struct Protocol2Outcome {
  std::optional<Protocol2Abort> aborted_at;
  CheckStats ctrl;
  CheckStats zsift;
  BitString alice_decoded;  // Alice's reading of Bob's message
  BitString bob_decoded;    // Bob's reading of Alice's message
  Transcript transcript;
  std::vector<ClassicalOp> bob_ops;
  KnowledgeRecord eve_knowledge;
  ResourceCounts resources;
};

inline void validate(const Protocol2Config& cfg) {
  if (cfg.n < 1) throw ConfigError("n must be at least 1");
  if (cfg.m < cfg.n) throw ConfigError("m must be at least n");
  if (cfg.p_ctrl < 0.0 || cfg.p_ctrl >= 1.0 || cfg.p_zsift < 0.0 || cfg.p_zsift >= 1.0) {
    throw ConfigError("thresholds must be in [0, 1)");
  }
}

inline Protocol2Outcome run_protocol2(const Protocol2Config& cfg, const BitString& msg_alice,
                                      const BitString& msg_bob, Adversary eve) {
  validate(cfg);
  if (msg_alice.size() != cfg.n || msg_bob.size() != cfg.n) {
    throw ConfigError("message lengths must equal n");
  }

  const std::size_t n = cfg.n;
  const std::size_t m = cfg.m;

  Rng rng(cfg.seed);
  Protocol2Outcome out;
  Channel ch(out.transcript, eve, rng);
  ClassicalParty bob(rng);

  auto finish = [&](std::optional<Protocol2Abort> abort) {
    out.aborted_at = abort;
    out.bob_ops = bob.take_log();
    out.eve_knowledge = eve.take_knowledge();
    return std::move(out);
  };

  ch.announce(Party::Alice, "session_parameters",
              {{"protocol", 2},
               {"n", n},
               {"m", m},
               {"p_ctrl", cfg.p_ctrl},
               {"p_zsift", cfg.p_zsift}});

  // Phase 1: Alice's photons travel to Bob.
  std::vector<PhotonState> alice_prepared(n);
  for (auto& p : alice_prepared) p = random_state(rng);
  PhotonBlock at_bob =
      ch.send_block("alice_to_bob", Party::Alice, Party::Bob, {alice_prepared, Party::Alice});

  // Phase 2: Bob encodes pairs, prepares samples, shuffles, returns.
  PreparedPairs prepared = bob_prepare_pairs(msg_bob, bob);
  std::vector<PhotonState> samples;
  samples.reserve(m + 2 * n);
  for (std::size_t i = 0; i < m + 2 * n; ++i) {
    samples.push_back(bob.prepare_z(random_bit(rng)));
  }
  ComposedBlock composed = compose_and_shuffle(prepared.photons, samples, at_bob, bob);
  bob.mark_send();
  PhotonBlock at_alice =
      ch.send_block("bob_to_alice", Party::Bob, Party::Alice, std::move(composed.outgoing));
  ch.announce(Party::Alice, "receipt", {{"leg", "bob_to_alice"}, {"photons", at_alice.size()}});

  // Phase 3: psi positions are revealed; Alice measures them in random bases.
  bob.mark_announce();
  ch.announce(Party::Bob, "psi_positions", {{"slots", composed.psi_slots_sorted}});
  std::vector<PsiMeasurement> psi_meas =
      alice_psi_measurements(at_alice, composed.psi_slots_sorted, rng);

  // Phase 4: psi internal order, and where Alice picked Z.
  bob.mark_announce();
  ch.announce(Party::Bob, "psi_order", {{"slots", composed.psi_order_slots}});
  {
    std::vector<std::size_t> z_slots;
    for (const auto& meas : psi_meas) {
      if (meas.basis == Basis::Z) z_slots.push_back(meas.slot);
    }
    ch.announce(Party::Alice, "z_basis_slots", {{"slots", z_slots}});
  }

  // Phase 5: CTRL check.
  out.ctrl = ctrl_check(alice_prepared, composed.psi_order_slots, psi_meas);
  const bool abort_ctrl = out.ctrl.rate() >= cfg.p_ctrl;
  ch.announce(Party::Alice, "ctrl_check",
              {{"compared", out.ctrl.compared},
               {"errors", out.ctrl.errors},
               {"error_rate", out.ctrl.rate()},
               {"abort", abort_ctrl}});
  if (abort_ctrl) return finish(Protocol2Abort::Ctrl);

  // Phase 6: Z-SIFT check.
  std::vector<std::pair<std::size_t, Bit>> zsift_entries;
  {
    std::map<std::size_t, const PsiMeasurement*> by_slot;
    for (const auto& meas : psi_meas) by_slot[meas.slot] = &meas;
    json entries = json::array();
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t slot = composed.psi_order_slots[n + j];
      const PsiMeasurement& meas = *by_slot.at(slot);
      if (meas.basis == Basis::Z) {
        zsift_entries.emplace_back(slot, meas.outcome);
        entries.push_back({slot, meas.outcome.value()});
      }
    }
    ch.announce(Party::Alice, "zsift_values", {{"entries", entries}});
  }
  {
    std::map<std::size_t, Bit> prepared_by_slot;
    for (std::size_t j = 0; j < m; ++j) {
      prepared_by_slot[composed.psi_order_slots[n + j]] =
          samples[composed.sift_sample_index[j]].bit;
    }
    out.zsift = zsift_check(zsift_entries, prepared_by_slot);
  }
  const bool abort_zsift = out.zsift.rate() >= cfg.p_zsift;
  bob.mark_announce();
  ch.announce(Party::Bob, "zsift_check",
              {{"compared", out.zsift.compared},
               {"errors", out.zsift.errors},
               {"error_rate", out.zsift.rate()},
               {"abort", abort_zsift}});
  if (abort_zsift) return finish(Protocol2Abort::Zsift);

  // Phase 7: phi is opened; Alice decodes the pairs and answers with the
  // one-time-pad ciphertext.
  bob.mark_announce();
  ch.announce(Party::Bob, "phi_disclosure", {{"message_slots", composed.message_slots}});
  std::vector<PhotonState> pairs_in_order;
  pairs_in_order.reserve(composed.message_slots.size());
  for (std::size_t slot : composed.message_slots) {
    pairs_in_order.push_back(at_alice.photons.at(slot));
  }
  DecodeEncryptResult dec = alice_decode_and_encrypt(pairs_in_order, msg_alice, rng);
  ch.announce(Party::Alice, "ciphertexts", {{"bits", to_string(dec.ciphertexts)}});

  out.alice_decoded = dec.bob_message;
  out.bob_decoded = bob_decrypt(dec.ciphertexts, prepared.pairs);
  out.resources.message_qubits = 2 * n;
  out.resources.classical_message_bits = n;
  out.resources.secret_bits = 2 * n;
  return finish(std::nullopt);
}

// The pair encode / decode / pad algebra alone, with forced pad bits and no
// check machinery. Used by the golden tests and the CLI.
struct DialoguePipeline2 {
  std::vector<MessagePair> pairs;
  std::vector<PhotonState> pair_photons;  // 2N, adjacent pair order
  BitString alice_read_bob;
  BitString ciphertexts;
  BitString bob_decoded;
};

inline DialoguePipeline2 run_message_pipeline2(const BitString& deltas, const BitString& msg_alice,
                                               const BitString& msg_bob) {
  if (msg_alice.size() != msg_bob.size()) {
    throw ConfigError("message lengths must match");
  }
  DialoguePipeline2 out;
  out.pairs = make_pairs(msg_bob, deltas);
  for (const auto& p : out.pairs) {
    out.pair_photons.push_back({Basis::Z, p.first});
    out.pair_photons.push_back({Basis::Z, p.second});
  }
  Rng rng(0);  // never consulted: all measurements below are matched-basis
  DecodeEncryptResult dec = alice_decode_and_encrypt(out.pair_photons, msg_alice, rng);
  out.alice_read_bob = dec.bob_message;
  out.ciphertexts = dec.ciphertexts;
  out.bob_decoded = bob_decrypt(dec.ciphertexts, out.pairs);
  return out;
}

}  // namespace sqd
