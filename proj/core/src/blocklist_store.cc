#include "trackguard/blocklist_store.h"

#include <algorithm>
#include <set>

#include "trackguard/errors.h"

namespace trackguard {

HashPrefix prefix_of(const FullHash& hash) {
  HashPrefix prefix;
  std::copy_n(hash.begin(), kHashPrefixSize, prefix.begin());
  return prefix;
}

bool PrefixStore::contains_prefix(const HashPrefix& prefix) const {
  return std::binary_search(prefixes_.begin(), prefixes_.end(), prefix);
}

const std::string* PrefixStore::confirm(const FullHash& hash) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), hash,
      [](const Entry& entry, const FullHash& h) { return entry.hash < h; });
  if (it == entries_.end() || it->hash != hash) return nullptr;
  return &it->expression;
}

std::vector<std::string> PrefixStore::expressions() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& entry : entries_) out.push_back(entry.expression);
  std::sort(out.begin(), out.end());
  return out;
}

void PrefixStore::insert_prefix_for_testing(const HashPrefix& prefix) {
  auto it = std::lower_bound(prefixes_.begin(), prefixes_.end(), prefix);
  if (it == prefixes_.end() || *it != prefix) prefixes_.insert(it, prefix);
}

PrefixStore make_store(uint64_t version, std::vector<std::string> expressions) {
  std::sort(expressions.begin(), expressions.end());
  expressions.erase(std::unique(expressions.begin(), expressions.end()),
                    expressions.end());
  PrefixStore store;
  store.version_ = version;
  store.entries_.reserve(expressions.size());
  store.prefixes_.reserve(expressions.size());
  for (auto& expression : expressions) {
    FullHash hash = sha256(expression);
    store.prefixes_.push_back(prefix_of(hash));
    store.entries_.push_back({hash, std::move(expression)});
  }
  std::sort(store.entries_.begin(), store.entries_.end(),
            [](const auto& a, const auto& b) { return a.hash < b.hash; });
  std::sort(store.prefixes_.begin(), store.prefixes_.end());
  store.prefixes_.erase(
      std::unique(store.prefixes_.begin(), store.prefixes_.end()),
      store.prefixes_.end());
  return store;
}

void validate_expression(std::string_view expression) {
  auto slash = expression.find('/');
  if (slash == 0 || slash == std::string_view::npos) {
    throw InvalidExpression("expression must be host/path: " +
                            std::string(expression));
  }
  if (expression.substr(0, slash).find(':') != std::string_view::npos &&
      expression.front() != '[') {
    throw InvalidExpression("expression must not carry a port: " +
                            std::string(expression));
  }
  CanonicalUrl url;
  try {
    url = parse_and_canonicalize("http://" + std::string(expression));
  } catch (const MalformedUrl& e) {
    throw InvalidExpression(std::string(expression) + ": " + e.what());
  }
  if (url.port || url.expression() != expression) {
    throw InvalidExpression("expression is not canonical: " +
                            std::string(expression));
  }
}

PrefixStore build(const std::vector<std::string>& expressions) {
  for (const auto& expression : expressions) validate_expression(expression);
  return make_store(1, expressions);
}

MatchResult lookup_expressions_in(const PrefixStore& store,
                                  const std::vector<std::string>& expressions) {
  for (const auto& expression : expressions) {
    FullHash hash = sha256(expression);
    if (!store.contains_prefix(prefix_of(hash))) continue;
    if (const std::string* confirmed = store.confirm(hash)) {
      return {true, *confirmed};
    }
  }
  return {};
}

MatchResult lookup(const PrefixStore& store, const CanonicalUrl& url) {
  if (store.prefixes().empty()) return {};
  return lookup_expressions_in(store, lookup_expressions(url));
}

PrefixStore apply_update(const PrefixStore& store, const ListUpdate& update) {
  validate(update);
  if (!update.is_snapshot() && update.from_version != store.version()) {
    throw VersionMismatch(store.version(), update.from_version);
  }
  for (const auto& expression : update.add) validate_expression(expression);

  if (update.is_snapshot()) return make_store(update.to_version, update.add);

  std::set<std::string> contents;
  for (auto& expression : store.expressions()) contents.insert(std::move(expression));
  // Absent removals are ignored so retried diffs stay idempotent.
  for (const auto& expression : update.remove) contents.erase(expression);
  contents.insert(update.add.begin(), update.add.end());
  return make_store(update.to_version,
                    std::vector<std::string>(contents.begin(), contents.end()));
}

std::string serialize(const PrefixStore& store) {
  ListUpdate snapshot;
  snapshot.from_version = 0;
  snapshot.to_version = store.version();
  snapshot.add = store.expressions();
  return encode_snapshot_file(snapshot);
}

PrefixStore deserialize(std::string_view bytes) {
  ListUpdate snapshot = decode_snapshot_file(bytes);
  try {
    for (const auto& expression : snapshot.add) validate_expression(expression);
  } catch (const InvalidExpression& e) {
    throw CorruptSnapshot(e.what());
  }
  return make_store(snapshot.to_version, std::move(snapshot.add));
}

StoreHandle::StoreHandle(PrefixStore initial)
    : store_(std::make_shared<const PrefixStore>(std::move(initial))) {}

std::shared_ptr<const PrefixStore> StoreHandle::current() const {
  std::lock_guard lock(mu_);
  return store_;
}

void StoreHandle::replace(PrefixStore next) {
  auto fresh = std::make_shared<const PrefixStore>(std::move(next));
  std::lock_guard lock(mu_);
  store_ = std::move(fresh);
}

}  // namespace trackguard
