#pragma once

#include <random>
#include <utility>
#include <vector>

#include "shardmap/docstore.hpp"
#include "shardmap/shard_spec.hpp"

namespace shardmap {

// The three sharding strategies over the document store: static property
// sharding, dynamic property sharding, and entity-group sharding, plus
// fold aggregation and batch compaction.

// Property under which shard entities reference their owner, e.g. a
// Question owner yields {"question": "<owner-id>"}.
std::string owner_ref_property(const Key& owner);

// Deterministic static shard keys "<owner-id>-1" .. "<owner-id>-n".
// Each shard is its own entity group.
std::vector<Key> make_shard_keys(const Key& owner, int n);

Entity make_shard_entity(const Key& shard_key, const Key& owner,
                         const ShardSpec& spec, const PropertyValue& value);

// Pure transform splitting the sharded property out of the main entity:
// shard 1 carries the original value, shards 2..n the neutral element.
// Nothing is persisted; the caller owns that.
std::pair<Entity, std::vector<Entity>> static_shard_init(const Entity& main,
                                                         const ShardSpec& spec);

// Uniform choice among the n static shard keys.
Key pick_random_shard(const Key& owner, const ShardSpec& spec,
                      std::mt19937_64& rng);

// Left-fold of shard values seeded with the neutral element.
PropertyValue fold_all(const std::vector<Entity>& shards,
                       const ShardSpec& spec);

// All shards of an owner. Static mode enumerates keys (strongly
// consistent); dynamic mode queries by owner reference and may be stale
// unless `consistent` selects the batch scan path.
std::vector<Entity> shards_of(Store& store, const Key& owner,
                              const ShardSpec& spec, bool consistent = false);

// Dynamic mode: persist a brand-new shard under a store-assigned fresh
// id. Fresh key, fresh group: cannot contend by construction.
Entity dynamic_shard_append(Store& store, const Key& owner,
                            const PropertyValue& delta, const ShardSpec& spec);

// Batch job folding all of an owner's shards into one. Inserts the folded
// shard first, then deletes the old ones, transactionally in chunks of at
// most max_groups_per_tx groups. Single-threaded per owner.
Entity compact(Store& store, const Key& owner, const ShardSpec& spec);

// Entity-group sharding: persist `member` under a randomly chosen replica
// group root "<root-id>-g<i>"; returns the chosen root.
Key group_shard_write(Store& store, const Key& group_root, int n,
                      Entity member, std::mt19937_64& rng);

// Union of entities across the n replica groups, deduplicated by
// (kind, id) and sorted by key.
std::vector<Entity> group_union(Store& store, const Key& root, int n);

}  // namespace shardmap
