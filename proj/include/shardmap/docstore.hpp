#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "shardmap/entity.hpp"
#include "shardmap/errors.hpp"
#include "shardmap/time.hpp"

namespace shardmap {

struct StoreConfig {
  // Virtual time a committed group write occupies its entity group.
  // Commits landing on a still-busy group fail with ContentionError.
  VirtualUs commit_service_time = virtual_ms(150);
  // Virtual delay before a committed write becomes visible to kind
  // queries. get() is always strongly consistent.
  VirtualUs query_staleness_window = virtual_ms(500);
  int max_groups_per_tx = 5;
  std::uint64_t rng_seed = 1;
  // Client-observed virtual latencies, accumulated for metrics only.
  VirtualUs read_latency = virtual_ms(5);
  VirtualUs commit_latency = virtual_ms(20);
};

enum class Comparator { eq, lt, gt, le, ge };

struct Filter {
  std::string property;
  Comparator cmp = Comparator::eq;
  PropertyValue value;
};

class Store;

enum class TxState { open, committed, aborted };

// Optimistic transaction over at most max_groups_per_tx entity groups.
// Reads record observed versions; commit validates them and applies all
// writes atomically, or aborts with no effect.
class Transaction {
 public:
  std::optional<Entity> read(const Key& key);
  void write(Entity entity);
  void erase(const Key& key);

  std::int64_t id() const { return id_; }
  TxState state() const { return state_; }

 private:
  friend class Store;
  Transaction(Store& store, std::int64_t id, std::vector<Key> roots);
  void require_in_scope(const Key& key) const;

  Store* store_;
  std::int64_t id_;
  std::vector<Key> group_roots_;
  std::map<Key, std::int64_t> read_set_;   // key -> observed version
  std::map<Key, Entity> write_set_;
  std::set<Key> erase_set_;
  TxState state_ = TxState::open;
};

// In-process simulated NoSQL document store on a discrete-event virtual
// clock. Single-writer contract: callers provide external mutual
// exclusion if embedding in a threaded host.
class Store {
 public:
  explicit Store(StoreConfig config = {});

  const StoreConfig& config() const { return config_; }
  VirtualClock& clock() { return clock_; }
  VirtualUs now() const { return clock_.now(); }
  void advance_time(VirtualUs delta) { clock_.advance(delta); }
  std::mt19937_64& rng() { return rng_; }

  // Auto-committing single-entity write. Strongly consistent for get().
  Key put(Entity entity);

  // Latest committed entity; never stale.
  std::optional<Entity> get(const Key& key);

  // Eventually consistent kind query with simple property filters.
  // Writes younger than query_staleness_window are not yet visible.
  std::vector<Entity> query(const std::string& kind,
                            const std::vector<Filter>& filters);

  // Strongly consistent scans for batch jobs, recovery, and debugging.
  std::vector<Entity> scan(const std::string& kind);
  std::vector<Entity> scan_group(const Key& group_root);

  Transaction begin_transaction(std::vector<Key> group_roots);
  void commit(Transaction& tx);

  // Store-assigned fresh id, unique per kind.
  std::string allocate_id(const std::string& kind);

  const std::vector<std::string>& event_log() const { return event_log_; }

  // Snapshot persistence (debugging / CLI). Loaded entities are
  // immediately visible; windows and the clock are reset.
  nlohmann::json dump();
  void load_snapshot(const nlohmann::json& snapshot);

  // Accumulated client-observed virtual cost of all operations so far.
  VirtualUs op_cost_accum() const { return op_cost_; }

 private:
  struct Revision {
    VirtualUs visible_at = 0;  // when kind queries start seeing it
    std::int64_t version = 0;
    bool deleted = false;
    nlohmann::json properties;
  };
  struct Record {
    std::vector<Revision> history;  // ascending visible_at
  };

  friend class Transaction;

  const Revision* latest(const Record& rec) const;
  const Revision* visible(const Record& rec) const;
  std::int64_t current_version(const Key& key) const;
  void apply_commit(std::int64_t tx_id, const std::map<Key, Entity>& writes,
                    const std::set<Key>& erases,
                    const std::map<Key, std::int64_t>& read_set);
  void log_outcome(std::int64_t tx_id, const std::set<Key>& groups,
                   bool committed);

  StoreConfig config_;
  VirtualClock clock_;
  std::mt19937_64 rng_;
  std::map<Key, Record> records_;
  std::map<Key, VirtualUs> group_busy_until_;
  std::map<std::string, std::int64_t> id_counters_;
  std::vector<std::string> event_log_;
  std::int64_t next_tx_id_ = 1;
  VirtualUs op_cost_ = 0;
};

}  // namespace shardmap
