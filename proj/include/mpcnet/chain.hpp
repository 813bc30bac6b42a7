#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mpcnet/hash.hpp"
#include "mpcnet/proof.hpp"

namespace mpcnet {

using Token = std::int64_t;

struct ChainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class TaskState { Created, Funded, Bidding, QuorumSelected, Computing, Verified, Failed, Settled };
const char* to_string(TaskState s);

/// Accept iff every signature verifies and the sigma values sum to zero
/// mod the proof's field. Cost is n verifications plus n additions,
/// independent of the circuit that produced the proof.
struct VerifyOutcome {
  bool ok = false;
  std::string reason;  // "bad-signature" | "mac-sum-nonzero" | "malformed-proof"
  int party = -1;      // offending signer for bad-signature
};

VerifyOutcome verify_proof(const ComputationProof& proof, const std::vector<PubKey>& roster);

/// Per-task resource bound an aborting party must at least cover:
/// estimate * (n - 1) other parties' work.
Token computation_stake(Token resource_estimate, int n);

/// Deposit formula max(computation, intel value) * security multiplier.
Token stake_required(Token computation_stake_, Token intel_value_stake, Token multiplier);

/// Probability that every member of an independently drawn quorum of size q
/// belongs to a colluding fraction f of the pool.
double coordinated_chance(double fraction, int quorum_size);

struct CreditRecord {
  int node_id = -1;
  u64 completed = 0, aborts = 0, slashes = 0;
};

/// completed / (completed + 2*aborts + 5*slashes), clamped to [0,1];
/// a fresh history counts as weight 1 so new nodes remain selectable.
double credit_weight(const CreditRecord& r);

/// Content-addressed MAC share record as stored on the DHT mock.
struct MacRecord {
  u64 sigma = 0;
  int party_id = -1;
  u64 session_id = 0;
  Bytes signature;  // over content_bytes() by the party's roster key

  Bytes content_bytes() const;
  Digest key() const { return sha3_256(content_bytes()); }
};

/// Put verifies the signature against the roster ("forged-record" on
/// failure) and refuses to rebind an existing key to different content.
/// Get re-verifies before returning, so a corrupted backing store is
/// detected at read time.
class MacStore {
 public:
  Digest put(const MacRecord& rec, const std::vector<PubKey>& roster);
  void put_as(const Digest& claimed_key, const MacRecord& rec, const std::vector<PubKey>& roster);
  MacRecord get(const Digest& key, const std::vector<PubKey>& roster) const;
  bool contains(const Digest& key) const { return records_.count(key) != 0; }
  std::size_t size() const { return records_.size(); }

 private:
  std::map<Digest, MacRecord> records_;
};

struct Task {
  u64 id = 0;
  std::string circuit_hash;
  int consumer = -1;
  Token fee = 0;
  Token deposit_required = 0;
  Token abort_bound = 0;
  std::vector<int> bidders;
  std::vector<int> participants;
  TaskState state = TaskState::Created;
  int blamed = -1;
};

struct AbsDataset {
  u64 id = 0;
  int owner = -1;
  std::vector<int> backers;  // position i was bought at price i+1
  Token pool = 0;            // accumulated revenue share
};

/// Single-writer event-sourced account book. Every mutation appends one
/// `event <seq> <type> <fields...>` line; token conservation holds after
/// every event: sum of balances + escrow + retry pool + dataset pools is
/// only changed by add_node minting.
class Ledger {
 public:
  explicit Ledger(u64 modulus = kMersenne61) : modulus_(modulus) {}

  int add_node(Token balance);
  Token balance(int account) const;
  Token escrow() const { return escrow_; }
  Token retry_pool() const { return retry_pool_; }
  Token total_tokens() const;
  const std::vector<std::string>& events() const { return events_; }
  const Task& task(u64 id) const;
  const CreditRecord& credit(int node) const;
  const AbsDataset& dataset(u64 id) const;
  std::vector<double> credit_weights(const std::vector<int>& nodes) const;

  // task lifecycle (legal transitions only, in declaration order)
  u64 create_task(const std::string& circuit_hash, int consumer, Token fee);
  void fund_task(u64 task, Token resource_estimate, int n_parties, Token intel_value,
                 Token multiplier);
  void open_bidding(u64 task);
  void bid(u64 task, int node);
  void fix_quorum(u64 task, u64 p, std::size_t q, const std::vector<int>& must_include);
  void start_computing(u64 task);
  void record_verified(u64 task);
  void record_failed(u64 task, int blamed);
  /// Verified: fee split evenly across the quorum (remainder back to the
  /// consumer), deposits returned. Failed: the blamed deposit compensates
  /// the others' spent cost, leftover seeds the retry pool, fee refunds.
  void settle(u64 task, Token spent_cost_total = 0);

  // Additive Backing System
  void abs_register(u64 dataset, int owner);
  Token abs_back(u64 dataset, int backer);                   // nth backer pays n
  Token abs_sell_position(u64 dataset, int seller, int buyer);  // price n+1 at n backers
  Token abs_sale(u64 dataset, int buyer, Token price);       // 20% of price to the pool
  Token abs_distribute(u64 dataset, Token revenue);          // per-backer share R/N

 private:
  void event(const std::string& type, const std::string& fields);
  Task& task_mut(u64 id);
  void transfer_to_escrow(int account, Token amount);
  void pay(int account, Token amount);

  u64 modulus_;
  std::map<int, Token> balances_;
  std::map<int, CreditRecord> credits_;
  std::map<u64, Task> tasks_;
  std::map<u64, AbsDataset> datasets_;
  Token escrow_ = 0;
  Token retry_pool_ = 0;
  Token minted_ = 0;
  u64 next_task_ = 1;
  int next_account_ = 0;
  u64 seq_ = 0;
  std::vector<std::string> events_;
};

}  // namespace mpcnet
