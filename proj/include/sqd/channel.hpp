#pragma once

#include <string>
#include <utility>

#include "sqd/adversary.hpp"
#include "sqd/transcript.hpp"

namespace sqd {

// One run's channel pair: photon blocks pass through the adversary, classical
// announcements are authenticated, unjammable, and world-readable (the
// adversary reads every one the moment it is made).
class Channel {
 public:
  Channel(Transcript& transcript, Adversary& eve, Rng& rng)
      : transcript_(&transcript), eve_(&eve), rng_(&rng) {}

  PhotonBlock send_block(const std::string& leg, Party from, Party to, PhotonBlock block) {
    PhotonBlock delivered = eve_->apply(leg, std::move(block), *rng_);
    transcript_->log_block({leg, from, to, delivered.size(), eve_->action_note(leg)});
    return delivered;
  }

  const Announcement& announce(Party sender, std::string label, json payload) {
    std::size_t seq =
        transcript_->log_announcement({sender, std::move(label), std::move(payload)});
    eve_->observe_announcement(seq);
    return std::get<Announcement>(transcript_->events().back().body);
  }

  Transcript& transcript() { return *transcript_; }
  Rng& rng() { return *rng_; }

 private:
  Transcript* transcript_;
  Adversary* eve_;
  Rng* rng_;
};

}  // namespace sqd
