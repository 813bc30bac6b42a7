#include "mpcnet/transport.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mpcnet {

Bytes envelope_bytes(const Envelope& e) {
  Bytes b;
  put_u64_le(b, e.round);
  put_u64_le(b, e.sender < 0 ? ~u64(0) : (u64)e.sender);
  put_u64_le(b, e.receiver < 0 ? ~u64(0) : (u64)e.receiver);
  put_u64_le(b, e.msg_type.size());
  b.insert(b.end(), e.msg_type.begin(), e.msg_type.end());
  put_u64_le(b, e.payload.size());
  b.insert(b.end(), e.payload.begin(), e.payload.end());
  return b;
}

// ---------------------------------------------------------------- adversary

const AdversaryAction* AdversarySpec::action_for(int party) const {
  for (const auto& a : actions)
    if (a.party == party) return &a;
  return nullptr;
}

void AdversarySpec::validate(int n) const {
  if ((int)actions.size() > n - 1)
    throw std::invalid_argument("adversary controls all parties: at most n-1 may be corrupted");
  for (const auto& a : actions)
    if (a.party < 0 || a.party >= n)
      throw std::invalid_argument("adversary names party " + std::to_string(a.party) +
                                  " outside the roster");
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::int64_t parse_i64(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("adversary spec: bad ") + what + " '" + s + "'");
  }
}

u64 parse_u64(const std::string& s, const char* what) {
  std::int64_t v = parse_i64(s, what);
  if (v < 0) throw std::invalid_argument(std::string("adversary spec: negative ") + what);
  return (u64)v;
}

}  // namespace

AdversarySpec AdversarySpec::parse(const std::string& text) {
  AdversarySpec spec;
  if (text.empty()) return spec;
  for (const std::string& entry : split(text, ';')) {
    if (entry.empty()) continue;
    auto f = split(entry, ':');
    if (f.size() < 2) throw std::invalid_argument("adversary spec: entry '" + entry +
                                                  "' needs party:kind");
    AdversaryAction a;
    a.party = (int)parse_u64(f[0], "party id");
    const std::string& kind = f[1];
    auto want = [&](std::size_t lo, std::size_t hi) {
      if (f.size() < lo || f.size() > hi)
        throw std::invalid_argument("adversary spec: wrong arity for '" + entry + "'");
    };
    if (kind == "honest") {
      want(2, 2);
      continue;  // explicit no-op entry
    } else if (kind == "tamper-open") {
      a.kind = AdvKind::tamper_open;
      want(2, 4);
      if (f.size() >= 3) a.offset = parse_i64(f[2], "offset");
      if (f.size() == 4) a.occurrence = parse_u64(f[3], "occurrence");
    } else if (kind == "tamper-mac") {
      a.kind = AdvKind::tamper_mac;
      want(2, 3);
      if (f.size() == 3) a.offset = parse_i64(f[2], "offset");
    } else if (kind == "wrong-epsilon") {
      a.kind = AdvKind::wrong_epsilon;
      want(2, 4);
      if (f.size() >= 3) a.offset = parse_i64(f[2], "offset");
      if (f.size() == 4) a.occurrence = parse_u64(f[3], "occurrence");
    } else if (kind == "abort-at") {
      a.kind = AdvKind::abort_at_round;
      want(3, 3);
      a.round = parse_u64(f[2], "round");
    } else if (kind == "corrupt-triple") {
      a.kind = AdvKind::corrupt_triple;
      want(3, 4);
      a.index = parse_u64(f[2], "triple index");
      if (f.size() == 4) a.offset = parse_i64(f[3], "offset");
    } else {
      throw std::invalid_argument("adversary spec: unknown behavior '" + kind + "'");
    }
    if (a.offset == 0 &&
        (a.kind == AdvKind::tamper_open || a.kind == AdvKind::tamper_mac ||
         a.kind == AdvKind::wrong_epsilon || a.kind == AdvKind::corrupt_triple))
      throw std::invalid_argument("adversary spec: zero offset is a no-op");
    if (spec.action_for(a.party))
      throw std::invalid_argument("adversary spec: duplicate entry for party " +
                                  std::to_string(a.party));
    spec.actions.push_back(a);
  }
  return spec;
}

std::string AdversarySpec::to_string() const {
  std::ostringstream out;
  bool first = true;
  for (const auto& a : actions) {
    if (!first) out << ';';
    first = false;
    out << a.party << ':';
    switch (a.kind) {
      case AdvKind::honest: out << "honest"; break;
      case AdvKind::tamper_open:
        out << "tamper-open:" << (a.offset > 0 ? "+" : "") << a.offset << ':' << a.occurrence;
        break;
      case AdvKind::tamper_mac:
        out << "tamper-mac:" << (a.offset > 0 ? "+" : "") << a.offset;
        break;
      case AdvKind::wrong_epsilon:
        out << "wrong-epsilon:" << (a.offset > 0 ? "+" : "") << a.offset << ':' << a.occurrence;
        break;
      case AdvKind::abort_at_round: out << "abort-at:" << a.round; break;
      case AdvKind::corrupt_triple:
        out << "corrupt-triple:" << a.index << ':' << (a.offset > 0 ? "+" : "") << a.offset;
        break;
    }
  }
  return out.str();
}

// --------------------------------------------------------------- transcript

Digest Transcript::genesis() { return sha3_256(Bytes{}); }

void Transcript::append(const Envelope& e) {
  Bytes buf(chain_.begin(), chain_.end());
  Bytes env = envelope_bytes(e);
  buf.insert(buf.end(), env.begin(), env.end());
  chain_ = sha3_256(buf);
  count_++;
  if (keep_records_) records_.push_back({e, chain_});
}

const std::vector<Transcript::Record>& Transcript::records() const {
  if (!keep_records_)
    throw std::logic_error("transcript was run in hash-only mode; records not retained");
  return records_;
}

void Transcript::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write transcript file: " + path);
  for (const auto& r : records()) {
    out << "round " << r.env.round << ' ' << r.env.sender << ' ';
    if (r.env.receiver == kBroadcast)
      out << '*';
    else
      out << r.env.receiver;
    out << ' ' << r.env.msg_type << ' ' << hex_encode(r.env.payload) << '\n';
  }
}

std::vector<Envelope> Transcript::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read transcript file: " + path);
  std::vector<Envelope> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag, recv, hex;
    Envelope e;
    ls >> tag >> e.round >> e.sender >> recv >> e.msg_type;
    if (!ls || tag != "round")
      throw std::runtime_error("transcript line " + std::to_string(lineno) + ": malformed");
    e.receiver = recv == "*" ? kBroadcast : std::stoi(recv);
    if (ls >> hex) e.payload = hex_decode(hex);
    out.push_back(e);
  }
  return out;
}

Digest Transcript::replay_file(const std::string& path) {
  Transcript t(false);
  for (const Envelope& e : read_file(path)) t.append(e);
  return t.final_hash();
}

// ------------------------------------------------------------------- fabric

Fabric::Fabric(int n, u64 modulus, AdversarySpec spec, u64 timeout_rounds)
    : n_(n), modulus_(modulus), spec_(std::move(spec)), timeout_(timeout_rounds), silent_(n, 0) {
  spec_.validate(n);
  if (timeout_ < 1) throw std::invalid_argument("fabric: timeout must be at least 1 round");
}

void Fabric::transform_payload(const AdversaryAction& act, Envelope& e, u64& progress) const {
  // Enumerate the wire values the behavior may perturb. Commitment openings
  // carry trailing nonces that are not wire values; only the leading value
  // and mac slots of each 32-byte outopen group are eligible.
  std::vector<std::size_t> slots;
  if (e.msg_type == "outopen") {
    for (std::size_t g = 0; g + 32 <= e.payload.size(); g += 32) {
      slots.push_back(g);
      slots.push_back(g + 8);
    }
  } else {
    for (std::size_t off = 0; off + 8 <= e.payload.size(); off += 8) slots.push_back(off);
  }
  for (std::size_t off : slots) {
    if (progress++ != act.occurrence) continue;
    u64 v = get_u64_le(e.payload.data() + off);
    u64 delta = (u64)(((act.offset % (std::int64_t)modulus_) + (std::int64_t)modulus_) %
                      (std::int64_t)modulus_);
    u64 nv = (u64)(((u128)(v % modulus_) + delta) % modulus_);
    Bytes enc;
    put_u64_le(enc, nv);
    std::copy(enc.begin(), enc.end(), e.payload.begin() + off);
  }
}

std::vector<std::vector<Envelope>> Fabric::exchange(u64 round,
                                                    std::vector<std::vector<Envelope>> outboxes,
                                                    const std::vector<bool>& expected) {
  if ((int)outboxes.size() != n_ || (int)expected.size() != n_)
    throw std::invalid_argument("fabric: outboxes/expected must cover every party");
  rounds_++;

  for (int p = 0; p < n_; p++) {
    const AdversaryAction* act = spec_.action_for(p);
    if (act && act->kind == AdvKind::abort_at_round && round >= act->round) outboxes[p].clear();
    if (expected[p] && outboxes[p].empty())
      silent_[p]++;
    else if (!outboxes[p].empty())
      silent_[p] = 0;
  }
  for (int p = 0; p < n_; p++)
    if (silent_[p] >= timeout_) throw TimeoutError(p, round);

  std::vector<Envelope> wire;
  for (int p = 0; p < n_; p++) {
    const AdversaryAction* act = spec_.action_for(p);
    for (Envelope& e : outboxes[p]) {
      e.round = round;
      e.sender = p;
      if (act) {
        bool open_class = (act->kind == AdvKind::tamper_open &&
                           (e.msg_type == "open" || e.msg_type == "outopen"));
        bool eps_class = (act->kind == AdvKind::wrong_epsilon && e.msg_type == "muleps");
        if (open_class || eps_class) transform_payload(*act, e, tamper_progress_[p]);
      }
      wire.push_back(std::move(e));
    }
  }
  std::sort(wire.begin(), wire.end(), [](const Envelope& a, const Envelope& b) {
    return std::tie(a.round, a.sender, a.receiver, a.msg_type) <
           std::tie(b.round, b.sender, b.receiver, b.msg_type);
  });

  std::vector<std::vector<Envelope>> inbox(n_);
  for (const Envelope& e : wire) {
    if (transcript_) transcript_->append(e);
    u64 fanout = e.receiver == kBroadcast ? (u64)(n_ - 1) : 1;
    envelopes_++;
    logical_ += fanout;
    auto& ts = per_type_[e.msg_type];
    ts.envelopes++;
    ts.bytes += e.payload.size();
    ts.logical += fanout;
    if (e.receiver == kBroadcast) {
      for (int q = 0; q < n_; q++) inbox[q].push_back(e);
    } else {
      if (e.receiver < 0 || e.receiver >= n_)
        throw std::invalid_argument("fabric: envelope addressed outside the roster");
      inbox[e.receiver].push_back(e);
    }
  }
  return inbox;
}

}  // namespace mpcnet
