#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "trackguard/list_update.h"
#include "trackguard/sha256.h"
#include "trackguard/url.h"

namespace trackguard {

inline constexpr std::size_t kHashPrefixSize = 4;

using HashPrefix = std::array<uint8_t, kHashPrefixSize>;
using FullHash = Sha256Digest;

HashPrefix prefix_of(const FullHash& hash);

struct MatchResult {
  bool matched = false;
  // The stored expression confirmed by its full hash.
  std::optional<std::string> expression;
};

// Versioned set of blocklist expressions. Lookups first test the 4-byte
// prefix set and confirm hits against the full SHA-256 digest.
//
// A built store is immutable; updates produce a new store.
class PrefixStore {
 public:
  struct Entry {
    FullHash hash;
    std::string expression;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  PrefixStore() = default;

  uint64_t version() const { return version_; }
  std::size_t expression_count() const { return entries_.size(); }
  std::span<const HashPrefix> prefixes() const { return prefixes_; }

  bool contains_prefix(const HashPrefix& prefix) const;
  // Expression whose digest equals `hash`, or nullptr.
  const std::string* confirm(const FullHash& hash) const;

  // Sorted lexicographically.
  std::vector<std::string> expressions() const;

  // Adds a bare prefix with no backing full hash, for exercising the
  // confirmation step.
  void insert_prefix_for_testing(const HashPrefix& prefix);

  friend bool operator==(const PrefixStore&, const PrefixStore&) = default;

 private:
  friend PrefixStore make_store(uint64_t, std::vector<std::string>);

  uint64_t version_ = 0;
  std::vector<HashPrefix> prefixes_;  // sorted, unique
  std::vector<Entry> entries_;        // sorted by hash
};

// Builds a store at `version` from already-validated expressions.
PrefixStore make_store(uint64_t version, std::vector<std::string> expressions);

// Throws InvalidExpression if `expression` is not a canonical
// "host/[path][?query]" string.
void validate_expression(std::string_view expression);

// Version 1 store. Throws InvalidExpression.
PrefixStore build(const std::vector<std::string>& expressions);

MatchResult lookup(const PrefixStore& store, const CanonicalUrl& url);
// Same as lookup() but over an explicit most-specific-first expression list.
MatchResult lookup_expressions_in(const PrefixStore& store,
                                  const std::vector<std::string>& expressions);

// Snapshot (from_version 0) replaces the contents; a diff removes then adds.
// Throws VersionMismatch if a diff does not start at store.version(), and
// InvalidUpdate / InvalidExpression for malformed payloads.
PrefixStore apply_update(const PrefixStore& store, const ListUpdate& update);

// Snapshot-file bytes; deterministic for equal stores.
std::string serialize(const PrefixStore& store);
// Throws CorruptSnapshot.
PrefixStore deserialize(std::string_view bytes);

// Owner of the live store. Readers take a reference-counted snapshot; a
// replacement is visible to subsequent readers only, never half-applied.
class StoreHandle {
 public:
  explicit StoreHandle(PrefixStore initial = {});

  std::shared_ptr<const PrefixStore> current() const;
  void replace(PrefixStore next);

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const PrefixStore> store_;
};

}  // namespace trackguard
