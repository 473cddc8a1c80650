#pragma once

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "shardmap/docstore.hpp"
#include "shardmap/shard_spec.hpp"
#include "shardmap/txretry.hpp"

namespace shardmap {

// Named update operation on a sharded property. `op` refers to the fixed
// method registry: "increment", "decrement", "add" (takes an argument).
struct ShardMethodDef {
  std::string name;
  std::string property;
  std::string op;
};

// Declarative mapping for one entity kind: which properties stay on the
// main entity and which are sharded, plus the update methods.
struct MappingDef {
  std::string kind;
  std::string id_property = "id";
  std::vector<std::string> plain_properties;
  std::vector<ShardSpec> shard_specs;
  std::vector<ShardMethodDef> shard_methods;

  nlohmann::json to_json() const;
  static MappingDef from_json(const nlohmann::json& j);
};

// In-memory image of an entity. For each sharded property it carries the
// aggregated logical value (what application code reads) and the
// session-local shard delta accumulated since load.
class MappedObject {
 public:
  const std::string& kind() const { return kind_; }
  const Key& key() const { return key_; }

  const PropertyValue& plain(const std::string& name) const;
  void set_plain(const std::string& name, PropertyValue value);
  bool plain_dirty() const { return plain_dirty_; }

  const PropertyValue& value(const std::string& property) const;
  const PropertyValue& shard_delta(const std::string& property) const;

 private:
  friend class Mapper;
  struct ShardedProp {
    PropertyValue aggregated;
    PropertyValue delta;
  };

  std::string kind_;
  Key key_;
  nlohmann::json plain_ = nlohmann::json::object();
  std::map<std::string, ShardedProp> sharded_;
  bool plain_dirty_ = false;
};

struct SaveReceipt {
  bool main_written = false;
  bool shard_written = false;
  std::optional<Key> shard_key;
  // save_with_retry only: the shard delta could not be persisted within
  // the policy's attempt budget and remains pending on the object.
  bool delta_abandoned = false;
};

// Object-mapper over the document store: registers shard specifications
// per kind and implements the load / update / save lifecycle.
class Mapper {
 public:
  explicit Mapper(Store& store) : store_(&store) {}

  // Validates fold laws with randomized probes at registration time.
  void register_mapping(MappingDef def);
  const MappingDef& mapping(const std::string& kind) const;

  // Reads the main entity plus all shards; aggregated value = fold over
  // shards, shard delta = neutral. Dynamic-mode shard reads go through
  // the (possibly stale) query path; static mode enumerates shard keys.
  MappedObject load(const std::string& kind, const Key& key);

  // Applies the named update to BOTH the shard delta and the aggregated
  // value, so application reads always see the expected value.
  void apply_shard_method(MappedObject& obj, const std::string& method);
  void apply_shard_method(MappedObject& obj, const std::string& method,
                          const PropertyValue& arg);

  // Persists the main entity when its plain properties changed, then
  // transfers each non-neutral shard delta: static mode folds it into one
  // random shard inside a transaction, dynamic mode appends a fresh
  // shard. On ContentionError the delta is kept so a retry re-submits it
  // exactly once.
  SaveReceipt save(MappedObject& obj, std::mt19937_64& rng);

  // save with the shard transaction wrapped in a retry policy. If the
  // policy gives up, the receipt reports the abandoned delta instead of
  // throwing.
  SaveReceipt save_with_retry(MappedObject& obj, const RetryPolicy& policy,
                              std::mt19937_64& rng);

  // Fold over the currently visible shards of a persisted entity.
  PropertyValue reload_value(const std::string& kind, const Key& key,
                             const std::string& property);

 private:
  const ShardSpec& spec_for(const MappingDef& def,
                            const std::string& property) const;
  void transfer_delta(MappedObject& obj, const MappingDef& def,
                      const ShardSpec& spec, SaveReceipt& receipt,
                      std::mt19937_64& rng);

  Store* store_;
  std::map<std::string, MappingDef> defs_;
};

}  // namespace shardmap
