#include "shardmap/entity.hpp"

#include "shardmap/errors.hpp"

namespace shardmap {

int compare(const Key& a, const Key& b) {
  // Order by parent chain first so that members of a group sort together.
  const bool ap = a.parent != nullptr;
  const bool bp = b.parent != nullptr;
  if (ap != bp) return ap ? 1 : -1;
  if (ap) {
    if (int c = compare(*a.parent, *b.parent); c != 0) return c;
  }
  if (int c = a.kind.compare(b.kind); c != 0) return c < 0 ? -1 : 1;
  if (int c = a.id.compare(b.id); c != 0) return c < 0 ? -1 : 1;
  return 0;
}

nlohmann::json Entity::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  j["kind"] = key.kind;
  j["id"] = key.id;
  if (key.parent) {
    j["parent-kind"] = key.parent->kind;
    j["parent-id"] = key.parent->id;
  }
  j["version"] = version;
  for (const auto& [name, value] : properties.items()) j[name] = value;
  return j;
}

Entity Entity::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("id"))
    throw StoreError("entity JSON must be an object with kind and id");
  Entity e;
  if (j.contains("parent-id")) {
    Key parent = Key::root(j.value("parent-kind", j["kind"].get<std::string>()),
                           j["parent-id"].get<std::string>());
    e.key = Key::child(parent, j["kind"].get<std::string>(),
                       j["id"].get<std::string>());
  } else {
    e.key = Key::root(j["kind"].get<std::string>(), j["id"].get<std::string>());
  }
  e.version = j.value("version", std::int64_t{0});
  for (const auto& [name, value] : j.items()) {
    if (name == "kind" || name == "id" || name == "parent-kind" ||
        name == "parent-id" || name == "version")
      continue;
    e.properties[name] = value;
  }
  return e;
}

}  // namespace shardmap
