#include "shardmap/mapper.hpp"

#include <algorithm>

#include "shardmap/fold.hpp"
#include "shardmap/shardcore.hpp"

namespace shardmap {
namespace {

PropertyValue numeric_add(const PropertyValue& v, double amount) {
  if (v.is_number_float()) return v.get<double>() + amount;
  return v.get<std::int64_t>() + static_cast<std::int64_t>(amount);
}

PropertyValue apply_op(const std::string& op, const PropertyValue& v,
                       const PropertyValue* arg) {
  if (op == "increment") return numeric_add(v, 1);
  if (op == "decrement") return numeric_add(v, -1);
  if (op == "add") {
    if (arg == nullptr || !arg->is_number())
      throw UnknownMethodError("op 'add' requires a numeric argument");
    if (v.is_number_float() || arg->is_number_float())
      return v.get<double>() + arg->get<double>();
    return v.get<std::int64_t>() + arg->get<std::int64_t>();
  }
  throw UnknownMethodError("unknown shard method op: " + op);
}

}  // namespace

nlohmann::json MappingDef::to_json() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["id_property"] = id_property;
  j["plain_properties"] = plain_properties;
  j["shard_specs"] = nlohmann::json::array();
  for (const auto& s : shard_specs) j["shard_specs"].push_back(s.to_json());
  j["shard_methods"] = nlohmann::json::array();
  for (const auto& m : shard_methods)
    j["shard_methods"].push_back(
        {{"name", m.name}, {"property", m.property}, {"op", m.op}});
  return j;
}

MappingDef MappingDef::from_json(const nlohmann::json& j) {
  MappingDef def;
  def.kind = j.at("kind").get<std::string>();
  def.id_property = j.value("id_property", std::string("id"));
  for (const auto& p : j.value("plain_properties", nlohmann::json::array()))
    def.plain_properties.push_back(p.get<std::string>());
  for (const auto& s : j.value("shard_specs", nlohmann::json::array()))
    def.shard_specs.push_back(ShardSpec::from_json(s));
  for (const auto& m : j.value("shard_methods", nlohmann::json::array()))
    def.shard_methods.push_back(ShardMethodDef{
        m.at("name").get<std::string>(), m.at("property").get<std::string>(),
        m.at("op").get<std::string>()});
  return def;
}

// ---------------------------------------------------------------- MappedObject

const PropertyValue& MappedObject::plain(const std::string& name) const {
  auto it = plain_.find(name);
  if (it == plain_.end())
    throw NotFoundError("no plain property " + name + " on " + kind_);
  return *it;
}

void MappedObject::set_plain(const std::string& name, PropertyValue value) {
  if (sharded_.count(name))
    throw StoreError("property " + name + " is sharded; use a shard method");
  plain_[name] = std::move(value);
  plain_dirty_ = true;
}

const PropertyValue& MappedObject::value(const std::string& property) const {
  auto it = sharded_.find(property);
  if (it != sharded_.end()) return it->second.aggregated;
  return plain(property);
}

const PropertyValue& MappedObject::shard_delta(
    const std::string& property) const {
  auto it = sharded_.find(property);
  if (it == sharded_.end())
    throw NotFoundError("property " + property + " is not sharded");
  return it->second.delta;
}

// ---------------------------------------------------------------------- Mapper

void Mapper::register_mapping(MappingDef def) {
  if (defs_.count(def.kind))
    throw DuplicateKindError("kind already registered: " + def.kind);
  std::vector<std::string> seen = def.plain_properties;
  for (const auto& spec : def.shard_specs) {
    if (std::find(seen.begin(), seen.end(), spec.property) != seen.end())
      throw ConfigError("property mapped twice: " + spec.property);
    seen.push_back(spec.property);
    if (spec.mode == ShardMode::static_n && spec.shard_count < 1)
      throw ConfigError("static shard count must be >= 1");
    check_fold_laws(fold_by_name(spec.fold), spec.neutral,
                    /*seed=*/0xf01dul ^ std::hash<std::string>{}(spec.property));
  }
  for (const auto& m : def.shard_methods) {
    bool sharded = std::any_of(
        def.shard_specs.begin(), def.shard_specs.end(),
        [&](const ShardSpec& s) { return s.property == m.property; });
    if (!sharded)
      throw ConfigError("shard method " + m.name +
                        " targets unsharded property " + m.property);
    if (m.op != "increment" && m.op != "decrement" && m.op != "add")
      throw UnknownMethodError("unknown shard method op: " + m.op);
  }
  defs_.emplace(def.kind, std::move(def));
}

const MappingDef& Mapper::mapping(const std::string& kind) const {
  auto it = defs_.find(kind);
  if (it == defs_.end()) throw NotFoundError("kind not registered: " + kind);
  return it->second;
}

const ShardSpec& Mapper::spec_for(const MappingDef& def,
                                  const std::string& property) const {
  for (const auto& s : def.shard_specs)
    if (s.property == property) return s;
  throw NotFoundError("property " + property + " is not sharded on " +
                      def.kind);
}

MappedObject Mapper::load(const std::string& kind, const Key& key) {
  const MappingDef& def = mapping(kind);
  auto main = store_->get(key);
  if (!main) throw NotFoundError("no entity " + key.to_string());

  MappedObject obj;
  obj.kind_ = kind;
  obj.key_ = key;
  obj.plain_ = main->properties;
  for (const auto& spec : def.shard_specs) {
    obj.plain_.erase(spec.property);
    MappedObject::ShardedProp p;
    p.aggregated = fold_all(shards_of(*store_, key, spec), spec);
    p.delta = spec.neutral;
    obj.sharded_.emplace(spec.property, std::move(p));
  }
  return obj;
}

void Mapper::apply_shard_method(MappedObject& obj, const std::string& method) {
  apply_shard_method(obj, method, nullptr);
}

void Mapper::apply_shard_method(MappedObject& obj, const std::string& method,
                                const PropertyValue& arg) {
  const MappingDef& def = mapping(obj.kind_);
  for (const auto& m : def.shard_methods) {
    if (m.name != method) continue;
    auto& prop = obj.sharded_.at(m.property);
    const PropertyValue* a = arg.is_null() ? nullptr : &arg;
    prop.delta = apply_op(m.op, prop.delta, a);
    prop.aggregated = apply_op(m.op, prop.aggregated, a);
    return;
  }
  throw UnknownMethodError("no shard method " + method + " on kind " +
                           obj.kind_);
}

void Mapper::transfer_delta(MappedObject& obj, const MappingDef& def,
                            const ShardSpec& spec, SaveReceipt& receipt,
                            std::mt19937_64& rng) {
  auto& prop = obj.sharded_.at(spec.property);
  const FoldFn& fn = fold_by_name(spec.fold);

  if (spec.mode == ShardMode::static_n) {
    Key shard_key = pick_random_shard(obj.key_, spec, rng);
    Transaction tx = store_->begin_transaction({shard_key});
    Entity shard;
    if (auto existing = tx.read(shard_key)) {
      shard = std::move(*existing);
    } else {
      shard = make_shard_entity(shard_key, obj.key_, spec, spec.neutral);
    }
    shard.properties[spec.shard_property()] =
        fn(shard.properties[spec.shard_property()], prop.delta);
    tx.write(shard);
    store_->commit(tx);  // ContentionError leaves the delta pending
    receipt.shard_key = shard_key;
  } else {
    Entity shard = dynamic_shard_append(*store_, obj.key_, prop.delta, spec);
    receipt.shard_key = shard.key;
  }
  prop.delta = spec.neutral;
  receipt.shard_written = true;
}

SaveReceipt Mapper::save(MappedObject& obj, std::mt19937_64& rng) {
  const MappingDef& def = mapping(obj.kind_);
  SaveReceipt receipt;
  // The main entity and shard writes are deliberately separate commits;
  // plain properties are written only when actually modified.
  if (obj.plain_dirty_) {
    store_->put(Entity{obj.key_, obj.plain_});
    obj.plain_dirty_ = false;
    receipt.main_written = true;
  }
  for (const auto& spec : def.shard_specs) {
    const auto& prop = obj.sharded_.at(spec.property);
    if (prop.delta == spec.neutral) continue;  // identity fold, skip
    transfer_delta(obj, def, spec, receipt, rng);
  }
  return receipt;
}

SaveReceipt Mapper::save_with_retry(MappedObject& obj,
                                    const RetryPolicy& policy,
                                    std::mt19937_64& rng) {
  const MappingDef& def = mapping(obj.kind_);
  SaveReceipt receipt;
  if (obj.plain_dirty_) {
    RetryOutcome out = with_retry(
        [&] { store_->put(Entity{obj.key_, obj.plain_}); }, policy,
        store_->clock(), rng);
    if (!out.success)
      throw ContentionError("main entity put failed after " +
                            std::to_string(out.attempts) + " attempts");
    obj.plain_dirty_ = false;
    receipt.main_written = true;
  }
  for (const auto& spec : def.shard_specs) {
    const auto& prop = obj.sharded_.at(spec.property);
    if (prop.delta == spec.neutral) continue;
    RetryOutcome out = with_retry(
        [&] { transfer_delta(obj, def, spec, receipt, rng); }, policy,
        store_->clock(), rng);
    if (!out.success) receipt.delta_abandoned = true;
  }
  return receipt;
}

PropertyValue Mapper::reload_value(const std::string& kind, const Key& key,
                                   const std::string& property) {
  const MappingDef& def = mapping(kind);
  auto main = store_->get(key);
  if (!main) throw NotFoundError("no entity " + key.to_string());
  for (const auto& spec : def.shard_specs) {
    if (spec.property != property) continue;
    return fold_all(shards_of(*store_, key, spec), spec);
  }
  auto it = main->properties.find(property);
  if (it == main->properties.end())
    throw NotFoundError("no property " + property + " on " +
                        key.to_string());
  return *it;
}

}  // namespace shardmap
