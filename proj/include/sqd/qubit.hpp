#pragma once

#include <cassert>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqd/rng.hpp"

namespace sqd {

// A classical bit. XOR is the only arithmetic the protocols ever do on it.
class Bit {
 public:
  constexpr Bit() = default;
  constexpr explicit Bit(unsigned v) : v_(static_cast<std::uint8_t>(v)) {
    assert(v <= 1);
  }

  constexpr unsigned value() const { return v_; }
  constexpr Bit flipped() const { return Bit(v_ ^ 1u); }

  friend constexpr Bit operator^(Bit a, Bit b) { return Bit(a.v_ ^ b.v_); }
  friend constexpr bool operator==(Bit, Bit) = default;

 private:
  std::uint8_t v_ = 0;
};

using BitString = std::vector<Bit>;

inline Bit random_bit(Rng& rng) { return Bit(rng.coin() ? 1u : 0u); }

inline BitString random_bits(std::size_t n, Rng& rng) {
  BitString out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_bit(rng));
  return out;
}

inline BitString parse_bits(std::string_view s) {
  BitString out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') {
      throw std::invalid_argument("bit string may contain only '0' and '1'");
    }
    out.push_back(Bit(static_cast<unsigned>(c - '0')));
  }
  return out;
}

inline std::string to_string(const BitString& bits) {
  std::string s;
  s.reserve(bits.size());
  for (Bit b : bits) s.push_back(b.value() ? '1' : '0');
  return s;
}

enum class Basis : std::uint8_t { Z, X };

inline std::string to_string(Basis b) { return b == Basis::Z ? "Z" : "X"; }

// One of the four carrier states, written (basis, bit):
// |0> = (Z,0), |1> = (Z,1), |+> = (X,0), |-> = (X,1).
// Every operation below maps this set to itself, so states stay symbolic and
// exact; no amplitude arithmetic is ever needed.
struct PhotonState {
  Basis basis = Basis::Z;
  Bit bit;

  friend constexpr bool operator==(const PhotonState&, const PhotonState&) = default;
};

inline constexpr PhotonState kKet0{Basis::Z, Bit(0)};
inline constexpr PhotonState kKet1{Basis::Z, Bit(1)};
inline constexpr PhotonState kKetPlus{Basis::X, Bit(0)};
inline constexpr PhotonState kKetMinus{Basis::X, Bit(1)};

inline std::string to_string(PhotonState s) {
  if (s.basis == Basis::Z) return s.bit.value() ? "|1>" : "|0>";
  return s.bit.value() ? "|->" : "|+>";
}

inline PhotonState parse_photon_state(std::string_view s) {
  if (s == "|0>" || s == "0") return kKet0;
  if (s == "|1>" || s == "1") return kKet1;
  if (s == "|+>" || s == "+") return kKetPlus;
  if (s == "|->" || s == "-") return kKetMinus;
  throw std::invalid_argument("unknown photon state: " + std::string(s));
}

inline PhotonState prepare(Basis basis, Bit bit) { return {basis, bit}; }

// Uniform over the four states. Draw order: basis first, then bit.
inline PhotonState random_state(Rng& rng) {
  Basis basis = rng.coin() ? Basis::X : Basis::Z;
  return {basis, random_bit(rng)};
}

struct MeasureResult {
  Bit outcome;
  PhotonState collapsed;
};

// Matching basis reads the encoded bit and leaves the photon as found;
// mismatched basis is a fair coin and the photon collapses to what was read.
// Consumes one rng draw only in the mismatched case.
inline MeasureResult measure(PhotonState state, Basis basis, Rng& rng) {
  if (state.basis == basis) return {state.bit, state};
  Bit outcome = random_bit(rng);
  return {outcome, PhotonState{basis, outcome}};
}

enum class Pauli : std::uint8_t { I, X };

// sigma_x flips the Z eigenstates and fixes the X eigenstates; the -1 phase
// it puts on |-> is unobservable here and is dropped.
inline PhotonState apply_pauli(PhotonState state, Pauli op) {
  if (op == Pauli::X && state.basis == Basis::Z) state.bit = state.bit.flipped();
  return state;
}

}  // namespace sqd
