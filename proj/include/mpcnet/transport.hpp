#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpcnet/hash.hpp"

namespace mpcnet {

/// receiver value meaning "delivered to every party (including the sender)"
inline constexpr int kBroadcast = -1;

struct Envelope {
  u64 round = 0;
  int sender = 0;
  int receiver = kBroadcast;
  std::string msg_type;
  Bytes payload;

  bool operator==(const Envelope& o) const {
    return round == o.round && sender == o.sender && receiver == o.receiver &&
           msg_type == o.msg_type && payload == o.payload;
  }
};

/// Canonical byte image used for both transcript hashing and file replay.
Bytes envelope_bytes(const Envelope& e);

enum class AdvKind { honest, tamper_open, tamper_mac, wrong_epsilon, abort_at_round, corrupt_triple };

struct AdversaryAction {
  int party = 0;
  AdvKind kind = AdvKind::honest;
  std::int64_t offset = 1;  // additive perturbation (tamper-open / tamper-mac / wrong-epsilon)
  u64 round = 0;            // abort-at-round
  u64 index = 0;            // corrupt-triple: which dealer triple
  u64 occurrence = 0;       // which wire value the payload transform hits
};

/// Per-party misbehavior plan. Text form (CLI):
///   "2:tamper-open:+1;4:abort-at:10"
/// entries `party:kind[:param[:occurrence]]`, kinds honest | tamper-open |
/// tamper-mac | wrong-epsilon | abort-at | corrupt-triple.
struct AdversarySpec {
  std::vector<AdversaryAction> actions;

  const AdversaryAction* action_for(int party) const;
  bool corrupted(int party) const { return action_for(party) != nullptr; }
  std::size_t corrupted_count() const { return actions.size(); }

  /// Dishonest majority bound: at most n-1 corrupted parties, ids in range.
  void validate(int n) const;

  static AdversarySpec parse(const std::string& text);  // throws std::invalid_argument
  std::string to_string() const;
};

/// Hash-chained, append-only message log. Each record's chain value is
/// SHA3-256(previous chain value || canonical envelope bytes); the empty log
/// reports the genesis hash SHA3-256("").
class Transcript {
 public:
  struct Record {
    Envelope env;
    Digest chain;
  };

  explicit Transcript(bool keep_records = true) : keep_records_(keep_records) {}

  void append(const Envelope& e);
  const Digest& final_hash() const { return chain_; }
  static Digest genesis();
  std::size_t size() const { return count_; }
  const std::vector<Record>& records() const;

  /// Text form, one line per record:
  ///   round <k> <sender> <receiver|*> <msg-type> <hex-payload>
  void write_file(const std::string& path) const;
  static std::vector<Envelope> read_file(const std::string& path);
  /// Re-chain a stored transcript; equal hashes mean an untampered log.
  static Digest replay_file(const std::string& path);

 private:
  bool keep_records_;
  std::size_t count_ = 0;
  Digest chain_ = genesis();
  std::vector<Record> records_;
};

/// Raised by the fabric when an expected sender stays silent past the
/// timeout; the session translates it into an abort-attack blame.
struct TimeoutError : std::runtime_error {
  int party;
  u64 round;
  TimeoutError(int party_, u64 round_)
      : std::runtime_error("timeout: party " + std::to_string(party_) + " silent at round " +
                           std::to_string(round_)),
        party(party_),
        round(round_) {}
};

/// Synchronous round-based message fabric. All parties submit their round's
/// outboxes, the fabric applies adversary payload transforms, records every
/// envelope, and delivers in the canonical (round, sender, receiver,
/// msg-type) order. Broadcast is consistent: one recorded envelope, the same
/// payload seen by all n parties.
class Fabric {
 public:
  struct TypeStats {
    u64 envelopes = 0;
    u64 bytes = 0;
    u64 logical = 0;  // point-to-point deliveries; broadcast counts n-1
  };

  Fabric(int n, u64 modulus, AdversarySpec spec, u64 timeout_rounds = 1);

  void attach_transcript(Transcript* t) { transcript_ = t; }

  /// One synchronous round. `expected[i]` marks parties whose silence counts
  /// toward the timeout. Throws TimeoutError naming the first offender.
  std::vector<std::vector<Envelope>> exchange(u64 round,
                                              std::vector<std::vector<Envelope>> outboxes,
                                              const std::vector<bool>& expected);

  u64 envelopes() const { return envelopes_; }
  u64 logical_messages() const { return logical_; }
  u64 rounds_run() const { return rounds_; }
  const std::map<std::string, TypeStats>& per_type() const { return per_type_; }

 private:
  void transform_payload(const AdversaryAction& act, Envelope& e, u64& progress) const;

  int n_;
  u64 modulus_;
  AdversarySpec spec_;
  u64 timeout_;
  Transcript* transcript_ = nullptr;
  std::vector<u64> silent_;
  std::map<int, u64> tamper_progress_;
  u64 envelopes_ = 0, logical_ = 0, rounds_ = 0;
  std::map<std::string, TypeStats> per_type_;
};

}  // namespace mpcnet
