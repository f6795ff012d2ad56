// Shared test helpers: an exhaustive branch-enumeration oracle for the
// single-photon check statistics, and small statistics utilities for the
// Monte Carlo assertions. The oracle keeps its own state representation and
// collapse rules on purpose; it must not lean on the library it checks.
#pragma once

#include <cmath>
#include <cstddef>
#include <tuple>
#include <vector>

namespace oracle {

// 0 = Z, 1 = X. A state is (basis, bit).
struct St {
  int basis;
  int bit;
};

struct Branch {
  double prob;
  int outcome;
  St collapsed;
};

// Projective measurement on the four-state set: matched basis is
// deterministic, mismatched is a fair coin that re-prepares in the measured
// basis. All probabilities are dyadic, so double arithmetic is exact.
inline std::vector<Branch> measure(St s, int basis) {
  if (s.basis == basis) return {{1.0, s.bit, s}};
  return {{0.5, 0, {basis, 0}}, {0.5, 1, {basis, 1}}};
}

inline std::vector<St> all_states() {
  return {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
}

// P(error on one reflected check photon) when the eavesdropper measures every
// photon of the outbound block in a uniformly random basis and forwards the
// collapse. Enumerates preparation x Eve basis x Born branches x the sender's
// re-measurement.
inline double reflected_error_intercept_random() {
  double p_err = 0.0;
  for (St prep : all_states()) {
    const double w_prep = 0.25;
    for (int eve_basis : {0, 1}) {
      const double w_eve = 0.5;
      for (const Branch& e : measure(prep, eve_basis)) {
        for (const Branch& a : measure(e.collapsed, prep.basis)) {
          if (a.outcome != prep.bit) {
            p_err += w_prep * w_eve * e.prob * a.prob;
          }
        }
      }
    }
  }
  return p_err;
}

// P(one chosen check photon produces an error event) in the first protocol's
// reflect-or-measure check, same eavesdropper. Covers both the reflected
// branch and the measure-and-resend branch (where only Z-prepared photons are
// comparable, and the resent photon deterministically matches the classical
// party's announced outcome because the return leg is clean).
inline double chosen_photon_error_intercept_random() {
  double p_err = 0.0;
  for (St prep : all_states()) {
    const double w_prep = 0.25;
    for (int eve_basis : {0, 1}) {
      const double w_eve = 0.5;
      for (const Branch& e : measure(prep, eve_basis)) {
        const double w = w_prep * w_eve * e.prob;
        // Reflected (prob 1/2): compare a re-measurement in the preparation
        // basis against the prepared bit.
        for (const Branch& a : measure(e.collapsed, prep.basis)) {
          if (a.outcome != prep.bit) p_err += 0.5 * w * a.prob;
        }
        // Measured and resent (prob 1/2): comparable only if prepared in Z.
        // Error if the announced Z outcome or the returned photon disagrees
        // with the prepared bit; the returned photon equals the outcome here.
        if (prep.basis == 0) {
          for (const Branch& b : measure(e.collapsed, 0)) {
            if (b.outcome != prep.bit) p_err += 0.5 * w * b.prob;
          }
        }
      }
    }
  }
  return p_err;
}

// Second protocol, all photons of the combined returning block replaced by a
// fixed fake Z state. Per CTRL photon: P(a matched-basis comparison errs).
inline double ctrl_error_fake_state(int fake_bit) {
  double p_err = 0.0;
  for (St prep : all_states()) {
    const double w_prep = 0.25;
    for (int alice_basis : {0, 1}) {
      const double w_basis = 0.5;
      if (alice_basis != prep.basis) continue;  // not a comparison
      for (const Branch& a : measure({0, fake_bit}, alice_basis)) {
        if (a.outcome != prep.bit) p_err += w_prep * w_basis * a.prob;
      }
    }
  }
  return p_err;
}

// Same attack, per SIFT photon: the classical party prepared a uniform Z bit,
// the quantum party Z-measures the fake with probability 1/2 and announces.
inline double zsift_error_fake_state(int fake_bit) {
  double p_err = 0.0;
  for (int bob_bit : {0, 1}) {
    const double w_bit = 0.5;
    for (int alice_basis : {0, 1}) {
      const double w_basis = 0.5;
      if (alice_basis != 0) continue;  // X results are never announced as Z values
      for (const Branch& a : measure({0, fake_bit}, 0)) {
        if (a.outcome != bob_bit) p_err += w_bit * w_basis * a.prob;
      }
    }
  }
  return p_err;
}

// Second protocol, eavesdropper Z-measures and resends the whole returning
// block. Returns P(error | the CTRL photon was measured in its preparation
// basis), i.e. the expected CTRL error rate, whose denominator is the
// matched-basis comparisons only.
inline double ctrl_error_measure_resend_z() {
  double p_err = 0.0;
  double p_compared = 0.0;
  for (St prep : all_states()) {
    const double w_prep = 0.25;
    for (const Branch& e : measure(prep, 0)) {
      for (int alice_basis : {0, 1}) {
        const double w_basis = 0.5;
        if (alice_basis != prep.basis) continue;
        p_compared += w_prep * e.prob * w_basis;
        for (const Branch& a : measure(e.collapsed, alice_basis)) {
          if (a.outcome != prep.bit) p_err += w_prep * e.prob * w_basis * a.prob;
        }
      }
    }
  }
  return p_err / p_compared;
}

}  // namespace oracle

namespace stats {

// Three-sigma band for a binomial proportion estimate.
inline double sigma3(double p, double n) { return 3.0 * std::sqrt(p * (1.0 - p) / n); }

// Wilson-Hilferty approximation of the chi-square quantile at standard
// normal quantile z (z = 2.3263 gives the 99th percentile).
inline double chi2_quantile(double dof, double z) {
  const double t = 2.0 / (9.0 * dof);
  const double c = 1.0 - t + z * std::sqrt(t);
  return dof * c * c * c;
}

inline double chi2_statistic(const std::vector<std::size_t>& counts, double expected) {
  double chi2 = 0.0;
  for (std::size_t c : counts) {
    const double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  return chi2;
}

}  // namespace stats
