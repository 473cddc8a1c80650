#include "shardmap/docstore.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <sstream>

namespace shardmap {
namespace {

bool is_atomic(const PropertyValue& v) {
  return v.is_number() || v.is_string() || v.is_boolean();
}

// Three-way compare of atomic values; nullopt when types are incomparable
// (the filter then simply does not match).
std::optional<int> compare_atomic(const PropertyValue& a,
                                  const PropertyValue& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_number_integer() && b.is_number_integer()) {
      auto x = a.get<std::int64_t>(), y = b.get<std::int64_t>();
      return x < y ? -1 : x > y ? 1 : 0;
    }
    double x = a.get<double>(), y = b.get<double>();
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (a.is_string() && b.is_string()) {
    int c = a.get<std::string>().compare(b.get<std::string>());
    return c < 0 ? -1 : c > 0 ? 1 : 0;
  }
  if (a.is_boolean() && b.is_boolean()) {
    int x = a.get<bool>(), y = b.get<bool>();
    return x - y;
  }
  return std::nullopt;
}

bool filter_matches(const Entity& e, const Filter& f) {
  if (!is_atomic(f.value))
    throw UnsupportedFilterError("filter value must be atomic: " + f.property);
  auto it = e.properties.find(f.property);
  if (it == e.properties.end()) return false;
  if (!is_atomic(*it))
    throw UnsupportedFilterError("filter on nested property: " + f.property);
  auto c = compare_atomic(*it, f.value);
  if (!c) return false;
  switch (f.cmp) {
    case Comparator::eq: return *c == 0;
    case Comparator::lt: return *c < 0;
    case Comparator::gt: return *c > 0;
    case Comparator::le: return *c <= 0;
    case Comparator::ge: return *c >= 0;
  }
  return false;
}

std::string format_groups(const std::set<Key>& groups) {
  std::string out;
  for (const auto& g : groups) {
    if (!out.empty()) out += ",";
    out += g.to_string();
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- Transaction

Transaction::Transaction(Store& store, std::int64_t id, std::vector<Key> roots)
    : store_(&store), id_(id), group_roots_(std::move(roots)) {}

void Transaction::require_in_scope(const Key& key) const {
  const Key& root = key.group_root();
  for (const auto& g : group_roots_)
    if (g == root) return;
  throw TransactionScopeError("key " + key.to_string() +
                              " outside transaction groups");
}

std::optional<Entity> Transaction::read(const Key& key) {
  if (state_ != TxState::open) throw StoreError("read on closed transaction");
  require_in_scope(key);
  if (auto it = write_set_.find(key); it != write_set_.end()) return it->second;
  if (erase_set_.count(key)) return std::nullopt;
  auto e = store_->get(key);
  // Absent entities record version 0 so insert-insert races conflict too.
  read_set_.emplace(key, e ? e->version : 0);
  return e;
}

void Transaction::write(Entity entity) {
  if (state_ != TxState::open) throw StoreError("write on closed transaction");
  require_in_scope(entity.key);
  erase_set_.erase(entity.key);
  write_set_[entity.key] = std::move(entity);
}

void Transaction::erase(const Key& key) {
  if (state_ != TxState::open) throw StoreError("erase on closed transaction");
  require_in_scope(key);
  write_set_.erase(key);
  erase_set_.insert(key);
}

// ---------------------------------------------------------------------- Store

Store::Store(StoreConfig config)
    : config_(config), rng_(config.rng_seed) {}

const Store::Revision* Store::latest(const Record& rec) const {
  return rec.history.empty() ? nullptr : &rec.history.back();
}

const Store::Revision* Store::visible(const Record& rec) const {
  const Revision* out = nullptr;
  for (const auto& rev : rec.history)
    if (rev.visible_at <= clock_.now()) out = &rev;
  return out;
}

std::int64_t Store::current_version(const Key& key) const {
  auto it = records_.find(key);
  if (it == records_.end()) return 0;
  const Revision* rev = latest(it->second);
  return (rev == nullptr || rev->deleted) ? 0 : rev->version;
}

void Store::log_outcome(std::int64_t tx_id, const std::set<Key>& groups,
                        bool committed) {
  std::ostringstream line;
  line << "t=" << clock_.now() / 1000 << " tx=" << tx_id
       << " groups=" << format_groups(groups)
       << " outcome=" << (committed ? "committed" : "contention");
  event_log_.push_back(line.str());
}

void Store::apply_commit(std::int64_t tx_id,
                         const std::map<Key, Entity>& writes,
                         const std::set<Key>& erases,
                         const std::map<Key, std::int64_t>& read_set) {
  std::set<Key> groups;
  for (const auto& [key, e] : writes) groups.insert(key.group_root());
  for (const auto& key : erases) groups.insert(key.group_root());

  // Optimistic validation: every read must still see its observed version.
  for (const auto& [key, observed] : read_set) {
    if (current_version(key) != observed) {
      log_outcome(tx_id, groups, false);
      throw ContentionError("version conflict on " + key.to_string());
    }
  }
  // Contention window: each written group must be free of in-flight commits.
  for (const auto& g : groups) {
    auto it = group_busy_until_.find(g);
    if (it != group_busy_until_.end() && it->second > clock_.now()) {
      log_outcome(tx_id, groups, false);
      throw ContentionError("group busy: " + g.to_string());
    }
  }

  const VirtualUs visible_at = clock_.now() + config_.query_staleness_window;
  for (const auto& [key, e] : writes) {
    Record& rec = records_[key];
    std::int64_t prev = latest(rec) ? latest(rec)->version : 0;
    rec.history.push_back(Revision{visible_at, prev + 1, false, e.properties});
  }
  for (const auto& key : erases) {
    Record& rec = records_[key];
    std::int64_t prev = latest(rec) ? latest(rec)->version : 0;
    rec.history.push_back(
        Revision{visible_at, prev + 1, true, nlohmann::json::object()});
  }
  for (const auto& g : groups)
    group_busy_until_[g] = clock_.now() + config_.commit_service_time;
  log_outcome(tx_id, groups, true);
}

Key Store::put(Entity entity) {
  op_cost_ += config_.commit_latency;
  std::map<Key, Entity> writes;
  writes.emplace(entity.key, entity);
  apply_commit(next_tx_id_++, writes, {}, {});
  return entity.key;
}

std::optional<Entity> Store::get(const Key& key) {
  op_cost_ += config_.read_latency;
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  const Revision* rev = latest(it->second);
  if (rev == nullptr || rev->deleted) return std::nullopt;
  return Entity{key, rev->properties, rev->version};
}

std::vector<Entity> Store::query(const std::string& kind,
                                 const std::vector<Filter>& filters) {
  op_cost_ += config_.read_latency;
  std::vector<Entity> out;
  for (const auto& [key, rec] : records_) {
    if (key.kind != kind) continue;
    const Revision* rev = visible(rec);
    if (rev == nullptr || rev->deleted) continue;
    Entity e{key, rev->properties, rev->version};
    bool match = true;
    for (const auto& f : filters)
      if (!filter_matches(e, f)) { match = false; break; }
    if (match) out.push_back(std::move(e));
  }
  return out;
}

std::vector<Entity> Store::scan(const std::string& kind) {
  op_cost_ += config_.read_latency;
  std::vector<Entity> out;
  for (const auto& [key, rec] : records_) {
    if (key.kind != kind) continue;
    const Revision* rev = latest(rec);
    if (rev == nullptr || rev->deleted) continue;
    out.push_back(Entity{key, rev->properties, rev->version});
  }
  return out;
}

std::vector<Entity> Store::scan_group(const Key& group_root) {
  op_cost_ += config_.read_latency;
  std::vector<Entity> out;
  for (const auto& [key, rec] : records_) {
    if (!(key.group_root() == group_root)) continue;
    const Revision* rev = latest(rec);
    if (rev == nullptr || rev->deleted) continue;
    out.push_back(Entity{key, rev->properties, rev->version});
  }
  return out;
}

Transaction Store::begin_transaction(std::vector<Key> group_roots) {
  std::vector<Key> roots;
  for (const auto& k : group_roots) {
    const Key& r = k.group_root();
    if (std::find(roots.begin(), roots.end(), r) == roots.end())
      roots.push_back(r);
  }
  if (roots.empty()) throw StoreError("transaction needs at least one group");
  if (static_cast<int>(roots.size()) > config_.max_groups_per_tx)
    throw TooManyGroupsError("transaction spans " +
                             std::to_string(roots.size()) + " groups, max " +
                             std::to_string(config_.max_groups_per_tx));
  return Transaction(*this, next_tx_id_++, std::move(roots));
}

void Store::commit(Transaction& tx) {
  if (tx.state_ != TxState::open) throw StoreError("commit on closed transaction");
  op_cost_ += config_.commit_latency;
  try {
    apply_commit(tx.id_, tx.write_set_, tx.erase_set_, tx.read_set_);
  } catch (const ContentionError&) {
    tx.state_ = TxState::aborted;
    throw;
  }
  tx.state_ = TxState::committed;
}

std::string Store::allocate_id(const std::string& kind) {
  // Fresh ids start above typical hand-assigned ids in test fixtures.
  std::int64_t& counter = id_counters_[kind];
  if (counter == 0) counter = 100;
  return std::to_string(counter++);
}

nlohmann::json Store::dump() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [key, rec] : records_) {
    const Revision* rev = latest(rec);
    if (rev == nullptr || rev->deleted) continue;
    out.push_back(Entity{key, rev->properties, rev->version}.to_json());
  }
  return out;
}

void Store::load_snapshot(const nlohmann::json& snapshot) {
  if (!snapshot.is_array()) throw StoreError("snapshot must be a JSON array");
  records_.clear();
  group_busy_until_.clear();
  event_log_.clear();
  id_counters_.clear();
  clock_ = VirtualClock{};
  for (const auto& j : snapshot) {
    Entity e = Entity::from_json(j);
    if (e.version <= 0) e.version = 1;
    // Keep fresh-id allocation ahead of any numeric id in the snapshot.
    errno = 0;
    char* end = nullptr;
    std::int64_t numeric = std::strtoll(e.key.id.c_str(), &end, 10);
    if (errno == 0 && end != nullptr && *end == '\0' &&
        numeric >= id_counters_[e.key.kind])
      id_counters_[e.key.kind] = numeric + 1;
    records_[e.key].history.push_back(
        Revision{0, e.version, false, e.properties});
  }
}

}  // namespace shardmap
