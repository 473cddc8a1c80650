#include "shardmap/shardcore.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "shardmap/fold.hpp"

namespace shardmap {

std::string owner_ref_property(const Key& owner) {
  std::string prop = owner.kind;
  std::transform(prop.begin(), prop.end(), prop.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return prop;
}

std::vector<Key> make_shard_keys(const Key& owner, int n) {
  if (n < 1) throw ConfigError("shard count must be >= 1");
  std::vector<Key> keys;
  keys.reserve(n);
  for (int i = 1; i <= n; ++i)
    keys.push_back(Key::root("Shard", owner.id + "-" + std::to_string(i)));
  return keys;
}

Entity make_shard_entity(const Key& shard_key, const Key& owner,
                         const ShardSpec& spec, const PropertyValue& value) {
  Entity shard;
  shard.key = shard_key;
  shard.key.kind = spec.shard_kind;
  shard.properties[owner_ref_property(owner)] = owner.id;
  shard.properties[spec.shard_property()] = value;
  return shard;
}

std::pair<Entity, std::vector<Entity>> static_shard_init(
    const Entity& main, const ShardSpec& spec) {
  auto it = main.properties.find(spec.property);
  if (it == main.properties.end())
    throw MissingPropertyError("entity " + main.key.to_string() +
                               " has no property " + spec.property);
  const PropertyValue original = *it;

  Entity stripped = main;
  stripped.properties.erase(spec.property);

  std::vector<Entity> shards;
  for (const Key& k : make_shard_keys(main.key, spec.shard_count)) {
    const PropertyValue& value = shards.empty() ? original : spec.neutral;
    shards.push_back(make_shard_entity(k, main.key, spec, value));
  }
  return {std::move(stripped), std::move(shards)};
}

Key pick_random_shard(const Key& owner, const ShardSpec& spec,
                      std::mt19937_64& rng) {
  if (spec.mode != ShardMode::static_n)
    throw ConfigError("pick_random_shard requires static mode");
  const int n = spec.shard_count;
  int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  Key key = Key::root(spec.shard_kind,
                      owner.id + "-" + std::to_string(i + 1));
  return key;
}

PropertyValue fold_all(const std::vector<Entity>& shards,
                       const ShardSpec& spec) {
  const FoldFn& fn = fold_by_name(spec.fold);
  PropertyValue acc = spec.neutral;
  const std::string prop = spec.shard_property();
  for (const Entity& s : shards) {
    auto it = s.properties.find(prop);
    if (it != s.properties.end()) acc = fn(acc, *it);
  }
  return acc;
}

std::vector<Entity> shards_of(Store& store, const Key& owner,
                              const ShardSpec& spec, bool consistent) {
  if (spec.mode == ShardMode::static_n) {
    std::vector<Entity> shards;
    for (Key k : make_shard_keys(owner, spec.shard_count)) {
      k.kind = spec.shard_kind;
      if (auto e = store.get(k)) shards.push_back(std::move(*e));
    }
    return shards;
  }
  if (consistent) {
    std::vector<Entity> shards;
    for (Entity& e : store.scan(spec.shard_kind)) {
      auto it = e.properties.find(owner_ref_property(owner));
      if (it != e.properties.end() && *it == PropertyValue(owner.id))
        shards.push_back(std::move(e));
    }
    return shards;
  }
  return store.query(spec.shard_kind,
                     {Filter{owner_ref_property(owner), Comparator::eq,
                             PropertyValue(owner.id)}});
}

Entity dynamic_shard_append(Store& store, const Key& owner,
                            const PropertyValue& delta, const ShardSpec& spec) {
  if (spec.mode != ShardMode::dynamic)
    throw ConfigError("dynamic_shard_append requires dynamic mode");
  Key key = Key::root(spec.shard_kind, store.allocate_id(spec.shard_kind));
  Entity shard = make_shard_entity(key, owner, spec, delta);
  store.put(shard);
  shard.version = 1;
  return shard;
}

Entity compact(Store& store, const Key& owner, const ShardSpec& spec) {
  const std::vector<Entity> shards =
      shards_of(store, owner, spec, /*consistent=*/true);
  if (shards.size() == 1) return shards.front();

  const PropertyValue total = fold_all(shards, spec);
  Key folded_key =
      Key::root(spec.shard_kind, store.allocate_id(spec.shard_kind));
  Entity folded = make_shard_entity(folded_key, owner, spec, total);

  // Insert the folded shard first, then delete the old ones, chunked by
  // the transaction group cap. Each shard is its own group.
  const int cap = store.config().max_groups_per_tx;
  std::size_t next = std::min(shards.size(), static_cast<std::size_t>(cap - 1));
  {
    std::vector<Key> groups = {folded_key};
    for (std::size_t i = 0; i < next; ++i) groups.push_back(shards[i].key);
    Transaction tx = store.begin_transaction(groups);
    tx.write(folded);
    for (std::size_t i = 0; i < next; ++i) tx.erase(shards[i].key);
    store.commit(tx);
  }
  while (next < shards.size()) {
    std::vector<Key> groups;
    std::size_t begin = next;
    while (next < shards.size() && static_cast<int>(groups.size()) < cap)
      groups.push_back(shards[next++].key);
    Transaction tx = store.begin_transaction(groups);
    for (std::size_t i = begin; i < next; ++i) tx.erase(shards[i].key);
    store.commit(tx);
  }

  auto result = store.get(folded_key);
  return result ? *result : folded;
}

Key group_shard_write(Store& store, const Key& group_root, int n,
                      Entity member, std::mt19937_64& rng) {
  if (n < 1) throw ConfigError("replica group count must be >= 1");
  int i = static_cast<int>(rng() % static_cast<std::uint64_t>(n)) + 1;
  Key replica_root =
      Key::root(group_root.kind, group_root.id + "-g" + std::to_string(i));
  member.key = Key::child(replica_root, member.key.kind, member.key.id);
  Transaction tx = store.begin_transaction({replica_root});
  tx.write(std::move(member));
  store.commit(tx);
  return replica_root;
}

std::vector<Entity> group_union(Store& store, const Key& root, int n) {
  std::map<std::pair<std::string, std::string>, Entity> dedup;
  for (int i = 1; i <= n; ++i) {
    Key replica_root =
        Key::root(root.kind, root.id + "-g" + std::to_string(i));
    for (Entity& e : store.scan_group(replica_root))
      dedup.emplace(std::make_pair(e.key.kind, e.key.id), std::move(e));
  }
  std::vector<Entity> out;
  for (auto& [k, e] : dedup) out.push_back(std::move(e));
  return out;
}

}  // namespace shardmap
