#include "trackguard/policy.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trackguard/errors.h"

namespace trackguard {

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::kBlock ? "block" : "allow";
}

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::kNoMatch: return "no_match";
    case Reason::kNavigationExempt: return "navigation_exempt";
    case Reason::kSiteOverride: return "site_override";
    case Reason::kFirstPartyExempt: return "first_party_exempt";
    case Reason::kBlocked: return "blocked";
  }
  return "no_match";
}

OverrideSet::OverrideSet(const PublicSuffixList& psl) : psl_(&psl) {}

OverrideSet::OverrideSet(const OverrideSet& other) : psl_(other.psl_) {
  std::shared_lock lock(other.mu_);
  sites_ = other.sites_;
}

OverrideSet& OverrideSet::operator=(const OverrideSet& other) {
  if (this == &other) return *this;
  std::set<std::string> copy;
  {
    std::shared_lock lock(other.mu_);
    copy = other.sites_;
  }
  std::unique_lock lock(mu_);
  psl_ = other.psl_;
  sites_ = std::move(copy);
  return *this;
}

std::string OverrideSet::key_for(std::string_view site) const {
  auto host = canonicalize_hostname(site);
  if (!host) throw InvalidDomain(0, "not a hostname: " + std::string(site));
  return psl_->registrable_domain(*host);
}

bool OverrideSet::set(std::string_view site) {
  std::string key = key_for(site);
  std::unique_lock lock(mu_);
  return sites_.insert(std::move(key)).second;
}

bool OverrideSet::clear(std::string_view site) {
  std::string key = key_for(site);
  std::unique_lock lock(mu_);
  return sites_.erase(key) > 0;
}

bool OverrideSet::covers(std::string_view host) const {
  std::string key = psl_->registrable_domain(host);
  std::shared_lock lock(mu_);
  return sites_.count(key) > 0;
}

std::vector<std::string> OverrideSet::sites() const {
  std::shared_lock lock(mu_);
  return {sites_.begin(), sites_.end()};
}

std::size_t OverrideSet::size() const {
  std::shared_lock lock(mu_);
  return sites_.size();
}

void OverrideSet::save(const std::filesystem::path& path) const {
  nlohmann::json doc{{"disabled_sites", sites()}};
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << doc.dump(2) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

OverrideSet OverrideSet::load(const std::filesystem::path& path,
                              const PublicSuffixList& psl) {
  OverrideSet overrides(psl);
  std::ifstream in(path, std::ios::binary);
  if (!in) return overrides;
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto doc = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() ||
      !doc.contains("disabled_sites") || !doc["disabled_sites"].is_array()) {
    throw Error("malformed override file " + path.string());
  }
  for (const auto& site : doc["disabled_sites"]) {
    if (!site.is_string()) throw Error("malformed override file " + path.string());
    overrides.set(site.get<std::string>());
  }
  return overrides;
}

Decision classify(const RequestMeta& request, const PrefixStore& store,
                  const OverrideSet& overrides, const PolicyConfig& config,
                  const PublicSuffixList& psl) {
  if (request.kind == RequestKind::kNavigation) {
    return {Verdict::kAllow, Reason::kNavigationExempt, std::nullopt};
  }
  MatchResult match = lookup(store, request.url);
  if (request.first_party_host) {
    if (overrides.covers(*request.first_party_host)) {
      return {Verdict::kAllow, Reason::kSiteOverride, match.expression};
    }
    if (config.third_party_only &&
        psl.registrable_domain(request.url.host) ==
            psl.registrable_domain(*request.first_party_host)) {
      return {Verdict::kAllow, Reason::kFirstPartyExempt, match.expression};
    }
  }
  if (match.matched) return {Verdict::kBlock, Reason::kBlocked, match.expression};
  return {Verdict::kAllow, Reason::kNoMatch, std::nullopt};
}

TelemetrySnapshot summarize_counters(uint64_t active, uint64_t disabled,
                                     uint64_t none) {
  TelemetrySnapshot snapshot;
  snapshot.active = active;
  snapshot.disabled = disabled;
  snapshot.none = none;
  snapshot.total = active + disabled + none;
  if (snapshot.total > 0) {
    auto total = static_cast<double>(snapshot.total);
    snapshot.active_pct = 100.0 * static_cast<double>(active) / total;
    snapshot.disabled_pct = 100.0 * static_cast<double>(disabled) / total;
    snapshot.none_pct = 100.0 * static_cast<double>(none) / total;
  }
  if (active + disabled > 0) {
    snapshot.disable_rate_pct = 100.0 * static_cast<double>(disabled) /
                                static_cast<double>(active + disabled);
  }
  return snapshot;
}

std::string encode_telemetry(const TelemetrySnapshot& snapshot) {
  nlohmann::json doc{
      {"active", snapshot.active},
      {"disabled", snapshot.disabled},
      {"none", snapshot.none},
      {"total", snapshot.total},
      {"active_pct", snapshot.active_pct},
      {"disabled_pct", snapshot.disabled_pct},
      {"none_pct", snapshot.none_pct},
      {"disable_rate_pct", nullptr},
  };
  if (snapshot.disable_rate_pct) doc["disable_rate_pct"] = *snapshot.disable_rate_pct;
  return doc.dump();
}

TelemetryBucket Telemetry::bucket_for(const PageSession& session,
                                      const OverrideSet& overrides) {
  bool overridden = !session.first_party_host.empty() &&
                    overrides.covers(session.first_party_host);
  if (overridden && session.matched_count > 0) return TelemetryBucket::kDisabled;
  if (!overridden && session.blocked_count > 0) return TelemetryBucket::kActive;
  return TelemetryBucket::kNone;
}

TelemetryBucket Telemetry::record_page_load(const PageSession& session,
                                            const OverrideSet& overrides) {
  TelemetryBucket bucket = bucket_for(session, overrides);
  add(bucket);
  return bucket;
}

void Telemetry::add(TelemetryBucket bucket, uint64_t count) {
  std::lock_guard lock(mu_);
  switch (bucket) {
    case TelemetryBucket::kActive: active_ += count; break;
    case TelemetryBucket::kDisabled: disabled_ += count; break;
    case TelemetryBucket::kNone: none_ += count; break;
  }
}

TelemetrySnapshot Telemetry::snapshot_counters() const {
  std::lock_guard lock(mu_);
  return summarize_counters(active_, disabled_, none_);
}

}  // namespace trackguard
