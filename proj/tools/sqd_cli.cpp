// Command-line front end: seeded experiment runs with report emission,
// transcript audits, efficiency figures, and the built-in golden checks of
// the encode/decode algebra.

#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sqd/analysis.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitGoldenMismatch = 3;
constexpr int kExitAborted = 4;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw sqd::ConfigError("cannot open " + path + " for writing");
  out << content;
}

int cmd_run(const sqd::ExperimentSpec& spec, const std::string& out_path,
            const std::string& csv_path, const std::string& transcript_path,
            bool fail_on_abort) {
  sqd::Report report = sqd::run_experiment(spec);
  if (out_path.empty()) {
    std::cout << report.to_string();
  } else {
    write_file(out_path, report.to_string());
  }
  if (!csv_path.empty()) write_file(csv_path, report.to_csv());
  if (!transcript_path.empty()) write_file(transcript_path, report.sample_transcript);
  if (fail_on_abort && report.doc.at("aggregate").at("aborts").get<std::size_t>() > 0) {
    std::cerr << "aborted trials present\n";
    return kExitAborted;
  }
  return kExitOk;
}

int cmd_audit(const std::string& transcript_path) {
  std::ifstream in(transcript_path, std::ios::binary);
  if (!in) throw sqd::ConfigError("cannot open transcript: " + transcript_path);
  std::vector<sqd::PositionHypotheses> positions;
  try {
    sqd::Transcript transcript = sqd::Transcript::parse(in);
    positions = sqd::leakage_audit(transcript);
  } catch (const sqd::ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw sqd::ConfigError("not an auditable transcript (" + transcript_path + "): " + e.what());
  }
  std::cout << "position  consistent_pairs  entropy_bits\n";
  for (std::size_t i = 0; i < positions.size(); ++i) {
    std::cout << i << "  " << positions[i].count() << "  " << positions[i].entropy_bits()
              << "\n";
  }
  return kExitOk;
}

int cmd_efficiency(int protocol, std::size_t n) {
  auto breakdown = sqd::efficiency_breakdown(protocol, n);
  auto ratio = breakdown.ratio();
  std::cout << "protocol=" << protocol << " n=" << n << " secret_bits=" << breakdown.secret_bits
            << " qubits=" << breakdown.qubits << " classical_bits=" << breakdown.classical_bits
            << " efficiency=" << ratio.str() << " (" << 100.0 * ratio.value() << "%)\n";
  return kExitOk;
}

// Re-derives both encode/decode tables and both worked dialogue examples.
int cmd_golden() {
  using namespace sqd;
  int failures = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "ok   " : "FAIL ") << what << "\n";
    if (!ok) failures++;
  };

  // Protocol 1 table: carrier |delta>, Bob's bit b, Alice's bit a. After
  // Bob: |delta^b>. After Alice: |delta^b^a>. Both parties decode exactly.
  for (unsigned d = 0; d < 2; ++d) {
    for (unsigned b = 0; b < 2; ++b) {
      for (unsigned a = 0; a < 2; ++a) {
        auto out = run_message_pipeline1({PhotonState{Basis::Z, Bit(d)}},
                                         parse_bits(a ? "1" : "0"), parse_bits(b ? "1" : "0"));
        bool ok = out.after_bob[0] == PhotonState{Basis::Z, Bit(d ^ b)} &&
                  out.after_alice[0] == PhotonState{Basis::Z, Bit(d ^ b ^ a)} &&
                  out.alice_decoded[0] == Bit(b) && out.bob_decoded[0] == Bit(a);
        check(ok, "p1 table row delta=" + std::to_string(d) + " b=" + std::to_string(b) +
                      " a=" + std::to_string(a));
      }
    }
  }

  // Protocol 2 table: pair (|delta>, |delta^b>), ciphertext c = a ^ (delta^b),
  // Bob recovers a, Alice reads b off the pair parity.
  for (unsigned d = 0; d < 2; ++d) {
    for (unsigned b = 0; b < 2; ++b) {
      for (unsigned a = 0; a < 2; ++a) {
        BitString deltas{Bit(d)};
        auto out = run_message_pipeline2(deltas, parse_bits(a ? "1" : "0"),
                                         parse_bits(b ? "1" : "0"));
        bool ok = out.pair_photons[0] == PhotonState{Basis::Z, Bit(d)} &&
                  out.pair_photons[1] == PhotonState{Basis::Z, Bit(d ^ b)} &&
                  out.ciphertexts[0] == (Bit(a) ^ Bit(d ^ b)) &&
                  out.alice_read_bob[0] == Bit(b) && out.bob_decoded[0] == Bit(a);
        check(ok, "p2 table row delta=" + std::to_string(d) + " b=" + std::to_string(b) +
                      " a=" + std::to_string(a));
      }
    }
  }

  // Worked dialogue, protocol 1: carriers |0>,|1>,|0>,|1>, Bob '0011',
  // Alice '0101'.
  {
    auto out = run_message_pipeline1({kKet0, kKet1, kKet0, kKet1}, parse_bits("0101"),
                                     parse_bits("0011"));
    std::vector<PhotonState> after_bob{kKet0, kKet1, kKet1, kKet0};
    std::vector<PhotonState> after_alice{kKet0, kKet0, kKet1, kKet1};
    check(out.after_bob == after_bob, "p1 dialogue: states after Bob's encoding");
    check(out.after_alice == after_alice, "p1 dialogue: states after Alice's encoding");
    check(to_string(out.alice_decoded) == "0011", "p1 dialogue: Alice reads 0011");
    check(to_string(out.bob_decoded) == "0101", "p1 dialogue: Bob reads 0101");
  }

  // Worked dialogue, protocol 2: pads 0,1,0,1 with Bob '0011' give pairs
  // |00>,|11>,|01>,|10>; Alice '0101' answers ciphertext '0011'.
  {
    auto out = run_message_pipeline2(parse_bits("0101"), parse_bits("0101"), parse_bits("0011"));
    std::vector<PhotonState> photons{kKet0, kKet0, kKet1, kKet1, kKet0, kKet1, kKet1, kKet0};
    check(out.pair_photons == photons, "p2 dialogue: prepared pair states");
    check(to_string(out.alice_read_bob) == "0011", "p2 dialogue: Alice reads 0011");
    check(to_string(out.ciphertexts) == "0011", "p2 dialogue: ciphertext 0011");
    check(to_string(out.bob_decoded) == "0101", "p2 dialogue: Bob reads 0101");
  }

  if (failures > 0) {
    std::cerr << failures << " golden check(s) failed\n";
    return kExitGoldenMismatch;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and analysis harness for two single-photon semi-quantum dialogue protocols"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a config file ([run] section mirrors the run flags)");

  sqd::ExperimentSpec spec;
  std::string out_path, csv_path, transcript_out;
  bool fail_on_abort = false;

  auto* run = app.add_subcommand("run", "Run seeded trials and emit a structured report");
  run->fallthrough(true);
  run->add_option("--protocol", spec.protocol, "Protocol variant: 1 or 2")->required();
  run->add_option("--n", spec.n, "Message length in bits")->required();
  run->add_option("--m", spec.m, "Protocol 2 extra sample count (default: n)");
  run->add_option("--adversary", spec.adversary,
                  "Adversary spec: passive | intercept_resend[:z|x|random] | "
                  "measure_resend:z|x | fake_state_injection[:0|1|+|-] "
                  "(append :legs=<leg,...> to restrict)");
  run->add_option("--trials", spec.trials, "Number of independent trials");
  run->add_option("--seed", spec.seed, "Master seed");
  run->add_option("--threshold", spec.threshold, "Protocol 1 check threshold");
  run->add_option("--p-ctrl", spec.p_ctrl, "Protocol 2 CTRL check threshold");
  run->add_option("--p-zsift", spec.p_zsift, "Protocol 2 Z-SIFT check threshold");
  run->add_option("--out", out_path, "Report path (default: stdout)");
  run->add_option("--csv", csv_path, "Also write per-trial rows as CSV");
  run->add_option("--transcript-out", transcript_out, "Write the first trial's transcript (JSONL)");
  run->add_flag("--fail-on-abort", fail_on_abort, "Exit 4 if any trial aborted at a check");

  std::string audit_transcript;
  auto* audit = app.add_subcommand("audit", "Per-position hypothesis entropy from a transcript");
  audit->add_option("--transcript", audit_transcript, "Transcript file (JSONL)")->required();

  int eff_protocol = 1;
  std::size_t eff_n = 1;
  auto* eff = app.add_subcommand("efficiency", "Information-theoretical efficiency");
  eff->add_option("--protocol", eff_protocol, "Protocol variant: 1 or 2")->required();
  eff->add_option("--n", eff_n, "Message length in bits")->required();

  auto* golden = app.add_subcommand("golden", "Re-derive the encoding tables and worked examples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      return cmd_run(spec, out_path, csv_path, transcript_out, fail_on_abort);
    }
    if (audit->parsed()) return cmd_audit(audit_transcript);
    if (eff->parsed()) return cmd_efficiency(eff_protocol, eff_n);
    if (golden->parsed()) return cmd_golden();
  } catch (const sqd::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
