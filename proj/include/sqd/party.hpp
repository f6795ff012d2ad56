#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqd/qubit.hpp"
#include "sqd/transcript.hpp"

namespace sqd {

// Everything the classical party is allowed to do. The trace of a run is
// checked against this set in tests: the second protocol must never contain
// MeasureZ.
enum class ClassicalOp : std::uint8_t {
  PrepareZ,
  MeasureZ,
  Reflect,
  Reorder,
  Send,
  Announce,
};

inline std::string to_string(ClassicalOp op) {
  switch (op) {
    case ClassicalOp::PrepareZ: return "prepare_z";
    case ClassicalOp::MeasureZ: return "measure_z";
    case ClassicalOp::Reflect: return "reflect";
    case ClassicalOp::Reorder: return "reorder";
    case ClassicalOp::Send: return "send";
    case ClassicalOp::Announce: return "announce";
  }
  return "?";
}

// The classical party's operation surface. This type exposes no X-basis
// preparation or measurement at all, and every protocol action Bob takes is
// routed through it, so the op log is a faithful trace of what he did.
class ClassicalParty {
 public:
  explicit ClassicalParty(Rng& rng) : rng_(&rng) {}

  Bit measure_z(PhotonState photon) {
    log_.push_back(ClassicalOp::MeasureZ);
    return measure(photon, Basis::Z, *rng_).outcome;
  }

  PhotonState prepare_z(Bit bit) {
    log_.push_back(ClassicalOp::PrepareZ);
    return {Basis::Z, bit};
  }

  PhotonState reflect(PhotonState photon) {
    log_.push_back(ClassicalOp::Reflect);
    return photon;
  }

  Permutation reorder(std::size_t n) {
    log_.push_back(ClassicalOp::Reorder);
    return Permutation::random(n, *rng_);
  }

  void mark_send() { log_.push_back(ClassicalOp::Send); }
  void mark_announce() { log_.push_back(ClassicalOp::Announce); }

  Rng& rng() { return *rng_; }
  const std::vector<ClassicalOp>& log() const { return log_; }
  std::vector<ClassicalOp> take_log() { return std::move(log_); }

 private:
  Rng* rng_;
  std::vector<ClassicalOp> log_;
};

}  // namespace sqd
