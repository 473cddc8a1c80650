#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

namespace shardmap {

// Property values carry the document model: atomic values plus lists and
// nested maps, round-tripping bit-exactly through JSON.
using PropertyValue = nlohmann::json;

// Hierarchical entity key. The group root is the top of the parent chain;
// a parentless key is its own group root.
struct Key {
  std::string kind;
  std::string id;
  std::shared_ptr<const Key> parent;  // null for group roots

  static Key root(std::string kind, std::string id) {
    return Key{std::move(kind), std::move(id), nullptr};
  }

  static Key child(const Key& parent, std::string kind, std::string id) {
    return Key{std::move(kind), std::move(id),
               std::make_shared<const Key>(parent)};
  }

  const Key& group_root() const {
    const Key* k = this;
    while (k->parent) k = k->parent.get();
    return *k;
  }

  std::string to_string() const {
    std::string s = parent ? parent->to_string() + "/" : std::string{};
    return s + kind + ":" + id;
  }
};

int compare(const Key& a, const Key& b);

inline bool operator==(const Key& a, const Key& b) { return compare(a, b) == 0; }
inline bool operator!=(const Key& a, const Key& b) { return compare(a, b) != 0; }
inline bool operator<(const Key& a, const Key& b) { return compare(a, b) < 0; }

struct Entity {
  Key key;
  nlohmann::json properties = nlohmann::json::object();
  std::int64_t version = 0;  // 0 = never committed

  // External JSON format: {"kind":..., "id":..., "parent-id": optional,
  // "version":..., ...properties} with properties inlined at top level.
  nlohmann::json to_json() const;
  static Entity from_json(const nlohmann::json& j);
};

}  // namespace shardmap
