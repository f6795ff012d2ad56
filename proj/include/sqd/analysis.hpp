#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sqd/adversary.hpp"
#include "sqd/protocol1.hpp"
#include "sqd/protocol2.hpp"

namespace sqd {

// Exact reduced fraction; the efficiency figures are rationals and are kept
// that way.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Ratio reduced(std::uint64_t num, std::uint64_t den) {
    std::uint64_t g = std::gcd(num, den);
    return {num / g, den / g};
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }

  friend bool operator==(const Ratio&, const Ratio&) = default;
};

struct EfficiencyBreakdown {
  std::size_t secret_bits = 0;
  std::size_t qubits = 0;
  std::size_t classical_bits = 0;

  Ratio ratio() const { return Ratio::reduced(secret_bits, qubits + classical_bits); }
};

// Secret bits exchanged per qubit plus classical bit consumed, check overhead
// excluded. Protocol 1 spends N carriers plus N fresh replacements and one
// announced bit per carrier; protocol 2 spends the 2N pair photons and one
// ciphertext bit per pair. Both come out to 2N / 3N.
inline EfficiencyBreakdown efficiency_breakdown(int protocol, std::size_t n) {
  if (n < 1) throw ConfigError("n must be at least 1");
  switch (protocol) {
    case 1:
      return {2 * n, n + n, n};
    case 2:
      return {2 * n, 2 * n, n};
    default:
      throw ConfigError("protocol must be 1 or 2");
  }
}

inline Ratio efficiency(int protocol, std::size_t n) {
  return efficiency_breakdown(protocol, n).ratio();
}

// Outside-observer hypothesis sets: what the public transcript alone pins
// down about each exchanged message position.
inline std::vector<PositionHypotheses> leakage_audit(const Transcript& transcript) {
  return guess_messages(KnowledgeRecord{}, transcript);
}

struct ExperimentSpec {
  int protocol = 1;
  std::size_t n = 1;
  std::size_t m = 0;  // protocol 2 sample surplus; 0 means "use n"
  double threshold = 0.05;
  double p_ctrl = 0.05;
  double p_zsift = 0.05;
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  std::string adversary = "passive";

  std::size_t effective_m() const { return m == 0 ? n : m; }

  void validate() const {
    if (protocol != 1 && protocol != 2) throw ConfigError("protocol must be 1 or 2");
    if (n < 1) throw ConfigError("n must be at least 1");
    if (trials < 1) throw ConfigError("trials must be at least 1");
    if (protocol == 2 && effective_m() < n) throw ConfigError("m must be at least n");
    Adversary::parse(adversary);  // throws ConfigError on a bad spec
    Protocol1Config p1{n, threshold, 0};
    sqd::validate(p1);
    if (protocol == 2) {
      Protocol2Config p2{n, effective_m(), p_ctrl, p_zsift, 0};
      sqd::validate(p2);
    }
  }
};

struct TrialResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::size_t reseeds = 0;  // fresh seeds after a Z-photon shortfall (protocol 1)
  std::optional<std::string> aborted_at;
  bool completed = false;
  bool recovered = false;
  ReturnCheckStats return_check;
  CheckStats sample_check;
  CheckStats ctrl;
  CheckStats zsift;
  std::vector<double> entropy_bits;  // per position; passive completed runs only
};

namespace detail {

inline json check_to_json(const CheckStats& s) {
  return {{"compared", s.compared}, {"errors", s.errors}, {"error_rate", s.rate()}};
}

inline json trial_to_json(const TrialResult& t, int protocol) {
  json row;
  row["trial"] = t.index;
  row["seed"] = t.seed;
  row["reseeds"] = t.reseeds;
  row["aborted_at"] = t.aborted_at ? json(*t.aborted_at) : json(nullptr);
  row["completed"] = t.completed;
  row["recovered"] = t.recovered;
  if (protocol == 1) {
    row["return_check"] = {{"compared", t.return_check.compared()},
                           {"errors", t.return_check.errors()},
                           {"error_rate", t.return_check.rate()},
                           {"reflected_compared", t.return_check.reflected_compared},
                           {"reflected_errors", t.return_check.reflected_errors},
                           {"zmeasured_compared", t.return_check.zmeasured_compared},
                           {"zmeasured_errors", t.return_check.zmeasured_errors}};
    row["sample_check"] = check_to_json(t.sample_check);
  } else {
    row["ctrl_check"] = check_to_json(t.ctrl);
    row["zsift_check"] = check_to_json(t.zsift);
  }
  row["entropy_bits"] = t.entropy_bits.empty() ? json(nullptr) : json(t.entropy_bits);
  return row;
}

}  // namespace detail

// Aggregate statistics recomputed from serialized per-trial rows, so
// everything in the aggregate is provably derivable from the rows.
inline json aggregate_from_rows(const json& rows, int protocol, std::size_t n) {
  json agg;
  const std::size_t trials = rows.size();
  std::size_t completed = 0, aborts = 0, recovered = 0, reseeds = 0;
  for (const auto& row : rows) {
    if (row.at("completed").get<bool>()) completed++;
    if (!row.at("aborted_at").is_null()) aborts++;
    if (row.at("recovered").get<bool>()) recovered++;
    reseeds += row.at("reseeds").get<std::size_t>();
  }
  agg["trials"] = trials;
  agg["completed"] = completed;
  agg["aborts"] = aborts;
  agg["abort_rate"] = trials ? static_cast<double>(aborts) / trials : 0.0;
  agg["reseeds"] = reseeds;
  agg["recovered"] = recovered;
  agg["recovery_accuracy"] =
      completed ? json(static_cast<double>(recovered) / completed) : json(nullptr);

  auto pooled = [&](const char* section) {
    std::size_t cmp = 0, err = 0;
    double rate_sum = 0.0;
    std::size_t rated = 0;
    for (const auto& row : rows) {
      const json& s = row.at(section);
      std::size_t c = s.at("compared").get<std::size_t>();
      cmp += c;
      err += s.at("errors").get<std::size_t>();
      if (c > 0) {
        rate_sum += s.at("error_rate").get<double>();
        rated++;
      }
    }
    json out;
    out["compared"] = cmp;
    out["errors"] = err;
    out["pooled_error_rate"] = cmp ? json(static_cast<double>(err) / cmp) : json(nullptr);
    out["mean_error_rate"] = rated ? json(rate_sum / rated) : json(nullptr);
    return out;
  };

  if (protocol == 1) {
    agg["return_check"] = pooled("return_check");
    {
      std::size_t cmp = 0, err = 0;
      for (const auto& row : rows) {
        cmp += row.at("return_check").at("reflected_compared").get<std::size_t>();
        err += row.at("return_check").at("reflected_errors").get<std::size_t>();
      }
      agg["reflected"] = {
          {"compared", cmp},
          {"errors", err},
          {"pooled_error_rate", cmp ? json(static_cast<double>(err) / cmp) : json(nullptr)}};
    }
    agg["sample_check"] = pooled("sample_check");
  } else {
    agg["ctrl_check"] = pooled("ctrl_check");
    agg["zsift_check"] = pooled("zsift_check");
  }

  {
    std::size_t audited = 0;
    double min_e = 0.0, max_e = 0.0, sum = 0.0;
    std::size_t count = 0;
    std::vector<double> per_position_sum(n, 0.0);
    for (const auto& row : rows) {
      const json& e = row.at("entropy_bits");
      if (e.is_null()) continue;
      audited++;
      for (std::size_t i = 0; i < e.size(); ++i) {
        double v = e[i].get<double>();
        if (count == 0) {
          min_e = max_e = v;
        } else {
          min_e = std::min(min_e, v);
          max_e = std::max(max_e, v);
        }
        sum += v;
        count++;
        if (i < n) per_position_sum[i] += v;
      }
    }
    if (audited == 0) {
      agg["leakage"] = nullptr;
    } else {
      std::vector<double> per_position(n);
      for (std::size_t i = 0; i < n; ++i) per_position[i] = per_position_sum[i] / audited;
      agg["leakage"] = {{"audited_trials", audited},
                        {"min_entropy_bits", min_e},
                        {"max_entropy_bits", max_e},
                        {"mean_entropy_bits", count ? sum / count : 0.0},
                        {"per_position_mean", per_position}};
    }
  }

  EfficiencyBreakdown eff = efficiency_breakdown(protocol, n);
  agg["efficiency"] = {{"secret_bits", eff.secret_bits},
                       {"qubits", eff.qubits},
                       {"classical_bits", eff.classical_bits},
                       {"exact", eff.ratio().str()},
                       {"value", eff.ratio().value()}};
  return agg;
}

struct Report {
  ExperimentSpec spec;
  std::vector<TrialResult> trials;
  json doc;                       // config + trials + aggregate
  std::string sample_transcript;  // first trial's transcript, JSONL

  std::string to_string() const { return doc.dump(2) + "\n"; }

  std::string to_csv() const {
    std::ostringstream out;
    const bool p1 = spec.protocol == 1;
    out << "trial,seed,reseeds,aborted_at,completed,recovered,";
    if (p1) {
      out << "return_compared,return_errors,return_error_rate,reflected_compared,"
             "reflected_errors,zmeasured_compared,zmeasured_errors,"
             "sample_compared,sample_errors,sample_error_rate,";
    } else {
      out << "ctrl_compared,ctrl_errors,ctrl_error_rate,"
             "zsift_compared,zsift_errors,zsift_error_rate,";
    }
    out << "min_entropy_bits,max_entropy_bits\n";
    for (const auto& t : trials) {
      out << t.index << ',' << t.seed << ',' << t.reseeds << ','
          << (t.aborted_at ? *t.aborted_at : "") << ',' << (t.completed ? 1 : 0) << ','
          << (t.recovered ? 1 : 0) << ',';
      if (p1) {
        out << t.return_check.compared() << ',' << t.return_check.errors() << ','
            << t.return_check.rate() << ',' << t.return_check.reflected_compared << ','
            << t.return_check.reflected_errors << ',' << t.return_check.zmeasured_compared << ','
            << t.return_check.zmeasured_errors << ',' << t.sample_check.compared << ','
            << t.sample_check.errors << ',' << t.sample_check.rate() << ',';
      } else {
        out << t.ctrl.compared << ',' << t.ctrl.errors << ',' << t.ctrl.rate() << ','
            << t.zsift.compared << ',' << t.zsift.errors << ',' << t.zsift.rate() << ',';
      }
      if (t.entropy_bits.empty()) {
        out << ",";
      } else {
        double min_e = t.entropy_bits[0], max_e = t.entropy_bits[0];
        for (double v : t.entropy_bits) {
          min_e = std::min(min_e, v);
          max_e = std::max(max_e, v);
        }
        out << min_e << ',' << max_e;
      }
      out << '\n';
    }
    return out.str();
  }
};

// Runs `trials` independent seeded simulations and aggregates them. Trial k
// uses the child seed derive_seed(master, k); its messages come from stream 0
// of that child and the run itself from stream 1+r, where r counts the fresh
// seeds taken after a Z-photon shortfall (protocol 1 with small N; each
// retake is recorded, never silent).
inline Report run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  constexpr std::size_t kMaxReseeds = 64;

  const bool passive = Adversary::parse(spec.adversary).kind() == Adversary::Kind::Passive;
  Report report;
  report.spec = spec;

  for (std::size_t t = 0; t < spec.trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(spec.seed, t);
    Rng msg_rng(derive_seed(trial_seed, 0));
    const BitString msg_alice = random_bits(spec.n, msg_rng);
    const BitString msg_bob = random_bits(spec.n, msg_rng);

    TrialResult row;
    row.index = t;

    const Transcript* transcript = nullptr;
    Protocol1Outcome out1;
    Protocol2Outcome out2;

    if (spec.protocol == 1) {
      bool done = false;
      for (std::size_t attempt = 0; attempt <= kMaxReseeds && !done; ++attempt) {
        row.seed = derive_seed(trial_seed, 1 + attempt);
        Protocol1Config cfg{spec.n, spec.threshold, row.seed};
        try {
          out1 = run_protocol1(cfg, msg_alice, msg_bob, Adversary::parse(spec.adversary));
          done = true;
        } catch (const InsufficientZPhotons&) {
          row.reseeds++;
        }
      }
      if (!done) throw ProtocolError("Z-photon shortfall persisted across reseeds");
      row.aborted_at = out1.aborted_at ? std::optional(to_string(*out1.aborted_at)) : std::nullopt;
      row.completed = !out1.aborted_at.has_value();
      row.recovered = row.completed && out1.alice_decoded == msg_bob && out1.bob_decoded == msg_alice;
      row.return_check = out1.return_check;
      row.sample_check = out1.sample_check;
      transcript = &out1.transcript;
    } else {
      row.seed = derive_seed(trial_seed, 1);
      Protocol2Config cfg{spec.n, spec.effective_m(), spec.p_ctrl, spec.p_zsift, row.seed};
      out2 = run_protocol2(cfg, msg_alice, msg_bob, Adversary::parse(spec.adversary));
      row.aborted_at = out2.aborted_at ? std::optional(to_string(*out2.aborted_at)) : std::nullopt;
      row.completed = !out2.aborted_at.has_value();
      row.recovered = row.completed && out2.alice_decoded == msg_bob && out2.bob_decoded == msg_alice;
      row.ctrl = out2.ctrl;
      row.zsift = out2.zsift;
      transcript = &out2.transcript;
    }

    if (passive && row.completed) {
      for (const auto& pos : leakage_audit(*transcript)) {
        row.entropy_bits.push_back(pos.entropy_bits());
      }
    }
    if (t == 0) report.sample_transcript = transcript->serialize();
    report.trials.push_back(std::move(row));
  }

  json rows = json::array();
  for (const auto& t : report.trials) {
    rows.push_back(detail::trial_to_json(t, spec.protocol));
  }
  json config;
  config["protocol"] = spec.protocol;
  config["n"] = spec.n;
  if (spec.protocol == 2) config["m"] = spec.effective_m();
  if (spec.protocol == 1) config["threshold"] = spec.threshold;
  if (spec.protocol == 2) {
    config["p_ctrl"] = spec.p_ctrl;
    config["p_zsift"] = spec.p_zsift;
  }
  config["seed"] = spec.seed;
  config["trials"] = spec.trials;
  config["adversary"] = spec.adversary;

  report.doc = json{{"config", config},
                    {"trials", rows},
                    {"aggregate", aggregate_from_rows(rows, spec.protocol, spec.n)}};
  return report;
}

}  // namespace sqd
