#include "mpcnet/chain.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mpcnet/quorum.hpp"
#include "mpcnet/sign.hpp"

namespace mpcnet {

const char* to_string(TaskState s) {
  switch (s) {
    case TaskState::Created: return "created";
    case TaskState::Funded: return "funded";
    case TaskState::Bidding: return "bidding";
    case TaskState::QuorumSelected: return "quorum-selected";
    case TaskState::Computing: return "computing";
    case TaskState::Verified: return "verified";
    case TaskState::Failed: return "failed";
    case TaskState::Settled: return "settled";
  }
  return "?";
}

VerifyOutcome verify_proof(const ComputationProof& proof, const std::vector<PubKey>& roster) {
  VerifyOutcome out;
  std::size_t n = roster.size();
  if (n == 0 || proof.modulus == 0 || proof.sigma.size() != n || proof.signatures.size() != n) {
    out.reason = "malformed-proof";
    return out;
  }
  for (std::size_t i = 0; i < n; i++) {
    if (!sig_verify(roster[i], proof_sign_bytes(proof, (int)i), proof.signatures[i])) {
      out.reason = "bad-signature";
      out.party = (int)i;
      return out;
    }
  }
  u128 sum = 0;
  for (u64 s : proof.sigma) sum = (sum + s % proof.modulus) % proof.modulus;
  if (sum != 0) {
    out.reason = "mac-sum-nonzero";
    return out;
  }
  out.ok = true;
  return out;
}

Token computation_stake(Token resource_estimate, int n) {
  if (resource_estimate < 0) throw ChainError("computation_stake: negative estimate");
  if (n < 2) throw ChainError("computation_stake: need at least 2 parties");
  return resource_estimate * (n - 1);
}

Token stake_required(Token computation_stake_, Token intel_value_stake, Token multiplier) {
  if (computation_stake_ < 0 || intel_value_stake < 0 || multiplier < 0)
    throw ChainError("stake_required: negative input");
  return std::max(computation_stake_, intel_value_stake) * multiplier;
}

double coordinated_chance(double fraction, int quorum_size) {
  if (fraction < 0.0 || fraction > 1.0)
    throw ChainError("coordinated_chance: fraction outside [0,1]");
  if (quorum_size < 0) throw ChainError("coordinated_chance: negative quorum");
  return std::pow(fraction, quorum_size);
}

double credit_weight(const CreditRecord& r) {
  double denom = (double)r.completed + 2.0 * r.aborts + 5.0 * r.slashes;
  if (denom == 0.0) return 1.0;
  double w = (double)r.completed / denom;
  return std::min(1.0, std::max(0.0, w));
}

Bytes MacRecord::content_bytes() const {
  Bytes b;
  put_u64_le(b, sigma);
  put_u64_le(b, (u64)party_id);
  put_u64_le(b, session_id);
  return b;
}

Digest MacStore::put(const MacRecord& rec, const std::vector<PubKey>& roster) {
  Digest k = rec.key();
  put_as(k, rec, roster);
  return k;
}

void MacStore::put_as(const Digest& claimed_key, const MacRecord& rec,
                      const std::vector<PubKey>& roster) {
  if (rec.party_id < 0 || rec.party_id >= (int)roster.size())
    throw ChainError("forged-record: unknown party");
  if (!sig_verify(roster[rec.party_id], rec.content_bytes(), rec.signature))
    throw ChainError("forged-record");
  if (claimed_key != rec.key()) throw ChainError("content hash mismatch");
  auto it = records_.find(claimed_key);
  if (it != records_.end()) {
    if (it->second.content_bytes() != rec.content_bytes() || it->second.signature != rec.signature)
      throw ChainError("immutable record");
    return;
  }
  records_[claimed_key] = rec;
}

MacRecord MacStore::get(const Digest& key, const std::vector<PubKey>& roster) const {
  auto it = records_.find(key);
  if (it == records_.end()) throw ChainError("record not found");
  const MacRecord& rec = it->second;
  if (rec.key() != key || rec.party_id < 0 || rec.party_id >= (int)roster.size() ||
      !sig_verify(roster[rec.party_id], rec.content_bytes(), rec.signature))
    throw ChainError("forged-record");
  return rec;
}

void Ledger::event(const std::string& type, const std::string& fields) {
  std::ostringstream os;
  os << "event " << ++seq_ << ' ' << type;
  if (!fields.empty()) os << ' ' << fields;
  events_.push_back(os.str());
}

Task& Ledger::task_mut(u64 id) {
  auto it = tasks_.find(id);
  if (it == tasks_.end()) throw ChainError("unknown task");
  return it->second;
}

const Task& Ledger::task(u64 id) const { return const_cast<Ledger*>(this)->task_mut(id); }

const CreditRecord& Ledger::credit(int node) const {
  auto it = credits_.find(node);
  if (it == credits_.end()) throw ChainError("unknown account");
  return it->second;
}

const AbsDataset& Ledger::dataset(u64 id) const {
  auto it = datasets_.find(id);
  if (it == datasets_.end()) throw ChainError("unknown dataset");
  return it->second;
}

std::vector<double> Ledger::credit_weights(const std::vector<int>& nodes) const {
  std::vector<double> w;
  w.reserve(nodes.size());
  for (int n : nodes) w.push_back(credit_weight(credit(n)));
  return w;
}

int Ledger::add_node(Token balance) {
  if (balance < 0) throw ChainError("add_node: negative balance");
  int id = next_account_++;
  balances_[id] = balance;
  credits_[id] = CreditRecord{id};
  minted_ += balance;
  std::ostringstream os;
  os << id << ' ' << balance;
  event("node", os.str());
  return id;
}

Token Ledger::balance(int account) const {
  auto it = balances_.find(account);
  if (it == balances_.end()) throw ChainError("unknown account");
  return it->second;
}

Token Ledger::total_tokens() const {
  Token t = escrow_ + retry_pool_;
  for (const auto& [id, b] : balances_) t += b;
  for (const auto& [id, d] : datasets_) t += d.pool;
  return t;
}

void Ledger::transfer_to_escrow(int account, Token amount) {
  Token& b = balances_.at(account);
  if (b < amount) throw ChainError("insufficient balance");
  b -= amount;
  escrow_ += amount;
}

void Ledger::pay(int account, Token amount) {
  if (escrow_ < amount) throw std::logic_error("ledger escrow underflow");
  escrow_ -= amount;
  balances_.at(account) += amount;
}

u64 Ledger::create_task(const std::string& circuit_hash, int consumer, Token fee) {
  if (fee < 0) throw ChainError("create_task: negative fee");
  transfer_to_escrow(consumer, fee);
  Task t;
  t.id = next_task_++;
  t.circuit_hash = circuit_hash;
  t.consumer = consumer;
  t.fee = fee;
  tasks_[t.id] = t;
  std::ostringstream os;
  os << t.id << ' ' << consumer << ' ' << fee << ' ' << circuit_hash;
  event("task-created", os.str());
  return t.id;
}

void Ledger::fund_task(u64 task, Token resource_estimate, int n_parties, Token intel_value,
                       Token multiplier) {
  Task& t = task_mut(task);
  if (t.state != TaskState::Created) throw ChainError("illegal transition");
  Token bound = computation_stake(resource_estimate, n_parties);
  Token required = stake_required(bound, intel_value, multiplier);
  // both §-style conditions: the max-formula deposit, strictly above the
  // abort compensation bound
  if (required <= bound) throw ChainError("stake-below-abort-bound");
  t.deposit_required = required;
  t.abort_bound = bound;
  t.state = TaskState::Funded;
  std::ostringstream os;
  os << t.id << ' ' << required << ' ' << bound;
  event("task-funded", os.str());
}

void Ledger::open_bidding(u64 task) {
  Task& t = task_mut(task);
  if (t.state != TaskState::Funded) throw ChainError("illegal transition");
  t.state = TaskState::Bidding;
  event("bidding", std::to_string(t.id));
}

void Ledger::bid(u64 task, int node) {
  Task& t = task_mut(task);
  if (t.state != TaskState::Bidding) throw ChainError("illegal transition");
  if (std::find(t.bidders.begin(), t.bidders.end(), node) != t.bidders.end())
    throw ChainError("duplicate bid");
  transfer_to_escrow(node, t.deposit_required);
  t.bidders.push_back(node);
  std::ostringstream os;
  os << t.id << ' ' << node << ' ' << t.deposit_required;
  event("bid", os.str());
}

void Ledger::fix_quorum(u64 task, u64 p, std::size_t q, const std::vector<int>& must_include) {
  Task& t = task_mut(task);
  if (t.state != TaskState::Bidding) throw ChainError("illegal transition");
  QuorumResult sel = select_quorum(p, t.bidders, q, must_include, credit_weights(t.bidders));
  t.participants = sel.selected;
  for (int node : t.bidders)
    if (std::find(t.participants.begin(), t.participants.end(), node) == t.participants.end())
      pay(node, t.deposit_required);  // losing bidders exit whole
  t.state = TaskState::QuorumSelected;
  std::ostringstream os;
  os << t.id << ' ' << p;
  for (int node : t.participants) os << ' ' << node;
  event("quorum", os.str());
}

void Ledger::start_computing(u64 task) {
  Task& t = task_mut(task);
  if (t.state != TaskState::QuorumSelected) throw ChainError("illegal transition");
  t.state = TaskState::Computing;
  event("computing", std::to_string(t.id));
}

void Ledger::record_verified(u64 task) {
  Task& t = task_mut(task);
  if (t.state != TaskState::Computing) throw ChainError("illegal transition");
  t.state = TaskState::Verified;
  event("verified", std::to_string(t.id));
}

void Ledger::record_failed(u64 task, int blamed) {
  Task& t = task_mut(task);
  if (t.state != TaskState::Computing) throw ChainError("illegal transition");
  if (std::find(t.participants.begin(), t.participants.end(), blamed) == t.participants.end())
    throw ChainError("blamed party not in quorum");
  t.state = TaskState::Failed;
  t.blamed = blamed;
  std::ostringstream os;
  os << t.id << ' ' << blamed;
  event("failed", os.str());
}

void Ledger::settle(u64 task, Token spent_cost_total) {
  Task& t = task_mut(task);
  if (spent_cost_total < 0) throw ChainError("settle: negative spent cost");
  if (t.state == TaskState::Verified) {
    Token share = t.participants.empty() ? 0 : t.fee / (Token)t.participants.size();
    for (int node : t.participants) {
      pay(node, share + t.deposit_required);
      credits_[node].completed++;
    }
    pay(t.consumer, t.fee - share * (Token)t.participants.size());
    t.state = TaskState::Settled;
    std::ostringstream os;
    os << t.id << " verified fee-share " << share;
    event("settled", os.str());
    return;
  }
  if (t.state == TaskState::Failed) {
    std::vector<int> others;
    for (int node : t.participants)
      if (node != t.blamed) others.push_back(node);
    Token comp_total = std::min(t.deposit_required, spent_cost_total);
    Token per = others.empty() ? 0 : comp_total / (Token)others.size();
    for (int node : others) {
      pay(node, per + t.deposit_required);
      credits_[node].aborts++;
    }
    // the blamed deposit beyond direct compensation seeds the retry group
    Token to_retry = t.deposit_required - per * (Token)others.size();
    escrow_ -= to_retry;
    retry_pool_ += to_retry;
    pay(t.consumer, t.fee);
    credits_[t.blamed].slashes++;
    t.state = TaskState::Settled;
    std::ostringstream os;
    os << t.id << " failed blamed " << t.blamed << " compensation " << per << " retry "
       << to_retry;
    event("settled", os.str());
    return;
  }
  throw ChainError("illegal transition");
}

void Ledger::abs_register(u64 dataset, int owner) {
  if (datasets_.count(dataset)) throw ChainError("dataset exists");
  balance(owner);  // must be a known account
  AbsDataset d;
  d.id = dataset;
  d.owner = owner;
  datasets_[dataset] = d;
  std::ostringstream os;
  os << dataset << ' ' << owner;
  event("abs-register", os.str());
}

Token Ledger::abs_back(u64 dataset, int backer) {
  auto it = datasets_.find(dataset);
  if (it == datasets_.end()) throw ChainError("unknown dataset");
  AbsDataset& d = it->second;
  Token price = (Token)d.backers.size() + 1;  // nth backer pays n
  Token& b = balances_.at(backer);
  if (b < price) throw ChainError("insufficient balance");
  b -= price;
  d.pool += price;
  d.backers.push_back(backer);
  std::ostringstream os;
  os << dataset << ' ' << backer << ' ' << price;
  event("abs-back", os.str());
  return price;
}

Token Ledger::abs_sell_position(u64 dataset, int seller, int buyer) {
  auto it = datasets_.find(dataset);
  if (it == datasets_.end()) throw ChainError("unknown dataset");
  AbsDataset& d = it->second;
  auto pos = std::find(d.backers.begin(), d.backers.end(), seller);
  if (pos == d.backers.end()) throw ChainError("position not owned");
  Token price = (Token)d.backers.size() + 1;  // n backers: position trades at n+1
  Token& bb = balances_.at(buyer);
  if (bb < price) throw ChainError("insufficient balance");
  bb -= price;
  balances_.at(seller) += price;
  *pos = buyer;
  std::ostringstream os;
  os << dataset << ' ' << seller << ' ' << buyer << ' ' << price;
  event("abs-sell", os.str());
  return price;
}

Token Ledger::abs_sale(u64 dataset, int buyer, Token price) {
  auto it = datasets_.find(dataset);
  if (it == datasets_.end()) throw ChainError("unknown dataset");
  if (price < 0) throw ChainError("abs_sale: negative price");
  AbsDataset& d = it->second;
  Token& b = balances_.at(buyer);
  if (b < price) throw ChainError("insufficient balance");
  Token pool_share = price / 5;  // 20% of the selling price backs the pool
  b -= price;
  d.pool += pool_share;
  balances_.at(d.owner) += price - pool_share;
  std::ostringstream os;
  os << dataset << ' ' << buyer << ' ' << price << ' ' << pool_share;
  event("abs-sale", os.str());
  return pool_share;
}

Token Ledger::abs_distribute(u64 dataset, Token revenue) {
  auto it = datasets_.find(dataset);
  if (it == datasets_.end()) throw ChainError("unknown dataset");
  AbsDataset& d = it->second;
  if (revenue < 0 || revenue > d.pool) throw ChainError("abs_distribute: revenue exceeds pool");
  if (d.backers.empty()) throw ChainError("abs_distribute: no backers");
  Token share = revenue / (Token)d.backers.size();
  for (int backer : d.backers) {
    balances_.at(backer) += share;
    d.pool -= share;
  }
  std::ostringstream os;
  os << dataset << ' ' << revenue << ' ' << share;
  event("abs-distribute", os.str());
  return share;
}

}  // namespace mpcnet
