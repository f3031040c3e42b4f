#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "trackguard/blocklist_store.h"
#include "trackguard/page_session.h"
#include "trackguard/public_suffix.h"
#include "trackguard/url.h"

namespace trackguard {

struct RequestMeta {
  CanonicalUrl url;
  RequestKind kind = RequestKind::kSubresource;
  // Host of the top-level page; absent for navigations.
  std::optional<std::string> first_party_host;
  std::optional<ElementHint> element_hint;
};

enum class Verdict { kAllow, kBlock };

enum class Reason {
  kNoMatch,
  kNavigationExempt,
  kSiteOverride,
  kFirstPartyExempt,
  kBlocked,
};

std::string_view to_string(Verdict verdict);
std::string_view to_string(Reason reason);

struct Decision {
  Verdict verdict = Verdict::kAllow;
  Reason reason = Reason::kNoMatch;
  // Set whenever the list matched, including allows by override or
  // first-party exemption. Always set for blocks.
  std::optional<std::string> matched_expression;

  friend bool operator==(const Decision&, const Decision&) = default;
};

struct PolicyConfig {
  // Exempt requests whose registrable domain equals the first party's.
  bool third_party_only = false;
};

// Per-site protection overrides keyed by registrable domain. Safe for
// concurrent use.
class OverrideSet {
 public:
  explicit OverrideSet(
      const PublicSuffixList& psl = PublicSuffixList::bundled());
  OverrideSet(const OverrideSet& other);
  OverrideSet& operator=(const OverrideSet& other);

  // Both return whether the set changed. Throw InvalidDomain when `site` is
  // not a hostname.
  bool set(std::string_view site);
  bool clear(std::string_view site);

  // True when the registrable domain of `host` is overridden.
  bool covers(std::string_view host) const;
  std::vector<std::string> sites() const;
  std::size_t size() const;

  // {"disabled_sites":[...]}. load() of a missing file yields an empty set.
  void save(const std::filesystem::path& path) const;
  static OverrideSet load(const std::filesystem::path& path,
                          const PublicSuffixList& psl = PublicSuffixList::bundled());

 private:
  std::string key_for(std::string_view site) const;

  const PublicSuffixList* psl_;
  mutable std::shared_mutex mu_;
  std::set<std::string> sites_;
};

// Rule order: navigation exemption, site override, first-party exemption
// (third_party_only mode), list match, otherwise allow.
Decision classify(const RequestMeta& request, const PrefixStore& store,
                  const OverrideSet& overrides, const PolicyConfig& config,
                  const PublicSuffixList& psl = PublicSuffixList::bundled());

enum class TelemetryBucket { kActive, kDisabled, kNone };

struct TelemetrySnapshot {
  uint64_t active = 0;
  uint64_t disabled = 0;
  uint64_t none = 0;
  uint64_t total = 0;
  // Percent of total; 0 when total is 0.
  double active_pct = 0;
  double disabled_pct = 0;
  double none_pct = 0;
  // disabled / (active + disabled) in percent; absent when no page load had
  // trackers.
  std::optional<double> disable_rate_pct;
};

TelemetrySnapshot summarize_counters(uint64_t active, uint64_t disabled,
                                     uint64_t none);
std::string encode_telemetry(const TelemetrySnapshot& snapshot);

// Page-load buckets: tracking protection active, disabled by the user on a
// page with trackers, or no trackers present.
class Telemetry {
 public:
  static TelemetryBucket bucket_for(const PageSession& session,
                                    const OverrideSet& overrides);

  TelemetryBucket record_page_load(const PageSession& session,
                                   const OverrideSet& overrides);
  void add(TelemetryBucket bucket, uint64_t count = 1);
  TelemetrySnapshot snapshot_counters() const;

 private:
  mutable std::mutex mu_;
  uint64_t active_ = 0;
  uint64_t disabled_ = 0;
  uint64_t none_ = 0;
};

}  // namespace trackguard
