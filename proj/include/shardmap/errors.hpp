#pragma once

#include <stdexcept>
#include <string>

namespace shardmap {

struct StoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A commit lost the optimistic race: either a version check failed or the
// entity group is still occupied by a previous commit's service window.
struct ContentionError : StoreError {
  using StoreError::StoreError;
};

struct TooManyGroupsError : StoreError {
  using StoreError::StoreError;
};

// A transactional read or write touched a key outside the declared groups.
struct TransactionScopeError : StoreError {
  using StoreError::StoreError;
};

struct UnsupportedFilterError : StoreError {
  using StoreError::StoreError;
};

struct NotFoundError : StoreError {
  using StoreError::StoreError;
};

struct MissingPropertyError : StoreError {
  using StoreError::StoreError;
};

struct DuplicateKindError : StoreError {
  using StoreError::StoreError;
};

struct FoldLawViolationError : StoreError {
  using StoreError::StoreError;
};

struct UnknownFoldError : StoreError {
  using StoreError::StoreError;
};

struct UnknownMethodError : StoreError {
  using StoreError::StoreError;
};

struct ConfigError : StoreError {
  using StoreError::StoreError;
};

}  // namespace shardmap
