#include "shardmap/fold.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "shardmap/errors.hpp"

namespace shardmap {
namespace {

std::map<std::string, FoldFn>& registry() {
  static std::map<std::string, FoldFn> folds = {
      {"sum-int",
       [](const PropertyValue& a, const PropertyValue& b) -> PropertyValue {
         return a.get<std::int64_t>() + b.get<std::int64_t>();
       }},
      {"sum-float",
       [](const PropertyValue& a, const PropertyValue& b) -> PropertyValue {
         return a.get<double>() + b.get<double>();
       }},
      {"max-int",
       [](const PropertyValue& a, const PropertyValue& b) -> PropertyValue {
         return std::max(a.get<std::int64_t>(), b.get<std::int64_t>());
       }},
      {"min-int",
       [](const PropertyValue& a, const PropertyValue& b) -> PropertyValue {
         return std::min(a.get<std::int64_t>(), b.get<std::int64_t>());
       }},
  };
  return folds;
}

}  // namespace

const FoldFn& fold_by_name(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end())
    throw UnknownFoldError("unregistered fold function: " + name);
  return it->second;
}

bool fold_registered(const std::string& name) {
  return registry().count(name) > 0;
}

void register_fold(const std::string& name, FoldFn fn) {
  registry()[name] = std::move(fn);
}

std::vector<std::string> registered_folds() {
  std::vector<std::string> names;
  for (const auto& [name, fn] : registry()) names.push_back(name);
  return names;
}

void check_fold_laws(const FoldFn& fold, const PropertyValue& neutral,
                     std::uint64_t seed, int probes) {
  std::mt19937_64 rng(seed);
  const bool floating = neutral.is_number_float();
  // Integer-valued probes keep float folds exact, so the laws can be
  // asserted with equality in both domains.
  auto draw = [&]() -> PropertyValue {
    std::int64_t v =
        static_cast<std::int64_t>(rng() % 20001) - 10000;
    if (floating) return static_cast<double>(v);
    return v;
  };
  for (int i = 0; i < probes; ++i) {
    PropertyValue a = draw(), b = draw(), c = draw();
    if (fold(a, b) != fold(b, a))
      throw FoldLawViolationError("fold is not commutative at " + a.dump() +
                                  ", " + b.dump());
    if (fold(fold(a, b), c) != fold(a, fold(b, c)))
      throw FoldLawViolationError("fold is not associative at " + a.dump() +
                                  ", " + b.dump() + ", " + c.dump());
    if (fold(neutral, a) != a || fold(a, neutral) != a)
      throw FoldLawViolationError("neutral " + neutral.dump() +
                                  " is not a two-sided identity at " + a.dump());
  }
}

}  // namespace shardmap
