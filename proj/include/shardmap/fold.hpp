#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "shardmap/entity.hpp"

namespace shardmap {

// Shard aggregation function. Must be commutative and associative over its
// domain and form a monoid with the shard spec's neutral element; registration
// probes these laws with randomized inputs.
using FoldFn =
    std::function<PropertyValue(const PropertyValue&, const PropertyValue&)>;

// Named registry so fold functions can be referenced from config files.
// Built-ins: sum-int, sum-float, max-int, min-int.
const FoldFn& fold_by_name(const std::string& name);
bool fold_registered(const std::string& name);
void register_fold(const std::string& name, FoldFn fn);
std::vector<std::string> registered_folds();

// Randomized probe of commutativity, associativity, and two-sided identity.
// Throws FoldLawViolationError on the first failing triple.
void check_fold_laws(const FoldFn& fold, const PropertyValue& neutral,
                     std::uint64_t seed, int probes = 256);

}  // namespace shardmap
