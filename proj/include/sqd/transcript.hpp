#pragma once

#include <cstddef>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sqd/qubit.hpp"

namespace sqd {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when too few Z-basis photons survive to the encoding phase of the
// first protocol. Callers may retry with a fresh seed; the run itself never
// retries silently.
class InsufficientZPhotons : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Party : std::uint8_t { Alice, Bob, Eve };

inline std::string to_string(Party p) {
  switch (p) {
    case Party::Alice: return "alice";
    case Party::Bob: return "bob";
    case Party::Eve: return "eve";
  }
  return "?";
}

inline Party parse_party(std::string_view s) {
  if (s == "alice") return Party::Alice;
  if (s == "bob") return Party::Bob;
  if (s == "eve") return Party::Eve;
  throw std::invalid_argument("unknown party: " + std::string(s));
}

// An ordered batch of photons in transit. Index order is significant: a
// position keeps its identity for the whole run unless an explicit, recorded
// permutation is applied.
struct PhotonBlock {
  std::vector<PhotonState> photons;
  Party origin = Party::Alice;

  std::size_t size() const { return photons.size(); }
};

// Bijection on [0, n). apply(i) is the slot that the element at position i
// moves to.
class Permutation {
 public:
  static Permutation identity(std::size_t n) {
    std::vector<std::size_t> m(n);
    for (std::size_t i = 0; i < n; ++i) m[i] = i;
    return Permutation(std::move(m), /*checked=*/true);
  }

  // Uniform over all n! orderings (Fisher-Yates on the identity mapping).
  static Permutation random(std::size_t n, Rng& rng) {
    Permutation p = identity(n);
    rng.shuffle(p.to_slot_);
    return p;
  }

  explicit Permutation(std::vector<std::size_t> to_slot)
      : Permutation(std::move(to_slot), /*checked=*/false) {
    std::vector<bool> seen(to_slot_.size(), false);
    for (std::size_t s : to_slot_) {
      if (s >= to_slot_.size() || seen[s]) {
        throw ConfigError("permutation mapping is not a bijection");
      }
      seen[s] = true;
    }
  }

  std::size_t size() const { return to_slot_.size(); }
  std::size_t apply(std::size_t i) const { return to_slot_.at(i); }
  const std::vector<std::size_t>& mapping() const { return to_slot_; }

  template <typename T>
  std::vector<T> permute(const std::vector<T>& v) const {
    if (v.size() != to_slot_.size()) {
      throw ConfigError("permutation size does not match block size");
    }
    std::vector<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[to_slot_[i]] = v[i];
    return out;
  }

  template <typename T>
  std::vector<T> unpermute(const std::vector<T>& v) const {
    if (v.size() != to_slot_.size()) {
      throw ConfigError("permutation size does not match block size");
    }
    std::vector<T> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[to_slot_[i]];
    return out;
  }

 private:
  Permutation(std::vector<std::size_t> to_slot, bool) : to_slot_(std::move(to_slot)) {}

  std::vector<std::size_t> to_slot_;
};

inline PhotonBlock permute(const PhotonBlock& b, const Permutation& p) {
  return {p.permute(b.photons), b.origin};
}

inline PhotonBlock unpermute(const PhotonBlock& b, const Permutation& p) {
  return {p.unpermute(b.photons), b.origin};
}

// A photon-block transmission as seen by the harness. The adversary note is
// bookkeeping for audits and reports; it is not part of any party's view.
struct BlockEvent {
  std::string leg;
  Party from = Party::Alice;
  Party to = Party::Bob;
  std::size_t photon_count = 0;
  std::string adversary_note;
};

// One message on the authenticated classical channel. Everyone, including
// the adversary, reads every announcement.
struct Announcement {
  Party sender = Party::Alice;
  std::string label;
  json payload;
};

struct TranscriptEvent {
  std::size_t seq = 0;
  std::variant<BlockEvent, Announcement> body;
};

// Totally ordered record of one run: every block transmission and every
// classical announcement, in the order they happened. Serializes to one JSON
// object per line with stable field names.
class Transcript {
 public:
  std::size_t log_block(BlockEvent ev) {
    std::size_t seq = events_.size();
    events_.push_back({seq, std::move(ev)});
    return seq;
  }

  std::size_t log_announcement(Announcement a) {
    std::size_t seq = events_.size();
    events_.push_back({seq, std::move(a)});
    return seq;
  }

  const std::vector<TranscriptEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  // First announcement with the given label, or nullptr.
  const Announcement* find(std::string_view label) const {
    for (const auto& ev : events_) {
      if (const auto* a = std::get_if<Announcement>(&ev.body)) {
        if (a->label == label) return a;
      }
    }
    return nullptr;
  }

  std::vector<const Announcement*> find_all(std::string_view label) const {
    std::vector<const Announcement*> out;
    for (const auto& ev : events_) {
      if (const auto* a = std::get_if<Announcement>(&ev.body)) {
        if (a->label == label) out.push_back(a);
      }
    }
    return out;
  }

  std::string serialize() const {
    std::string out;
    for (const auto& ev : events_) {
      json line;
      line["seq"] = ev.seq;
      if (const auto* b = std::get_if<BlockEvent>(&ev.body)) {
        line["type"] = "block";
        line["leg"] = b->leg;
        line["from"] = to_string(b->from);
        line["to"] = to_string(b->to);
        line["photons"] = b->photon_count;
        line["adversary"] = b->adversary_note;
      } else {
        const auto& a = std::get<Announcement>(ev.body);
        line["type"] = "announce";
        line["sender"] = to_string(a.sender);
        line["label"] = a.label;
        line["payload"] = a.payload;
      }
      out += line.dump();
      out += '\n';
    }
    return out;
  }

  static Transcript parse(std::istream& in) {
    Transcript t;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "block") {
        BlockEvent b;
        b.leg = j.at("leg").get<std::string>();
        b.from = parse_party(j.at("from").get<std::string>());
        b.to = parse_party(j.at("to").get<std::string>());
        b.photon_count = j.at("photons").get<std::size_t>();
        b.adversary_note = j.at("adversary").get<std::string>();
        t.log_block(std::move(b));
      } else if (type == "announce") {
        Announcement a;
        a.sender = parse_party(j.at("sender").get<std::string>());
        a.label = j.at("label").get<std::string>();
        a.payload = j.at("payload");
        t.log_announcement(std::move(a));
      } else {
        throw ProtocolError("unknown transcript event type: " + type);
      }
    }
    return t;
  }

  static Transcript parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

 private:
  std::vector<TranscriptEvent> events_;
};

}  // namespace sqd
