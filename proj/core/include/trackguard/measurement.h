#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "trackguard/cookies.h"
#include "trackguard/fetcher.h"

namespace trackguard {

struct PageMetrics {
  double load_time_ms = 0;
  double bytes = 0;
  double requests = 0;  // sent upstream: session requests minus blocked
  double cookies = 0;
};

struct Reductions {
  std::optional<double> load_time;
  std::optional<double> bytes;
  std::optional<double> requests;
  std::optional<double> cookies;
};

struct SiteComparison {
  std::string site;
  std::size_t reps = 0;
  PageMetrics median_protected;
  PageMetrics median_unprotected;
  // Median blocked count over protected runs.
  double trackers_blocked = 0;
  Reductions reductions;
  std::set<CookieKey> cookies_protected;
  std::set<CookieKey> cookies_unprotected;
};

struct CdfPoint {
  double value = 0;
  double fraction = 0;
};

struct CorpusReport {
  std::vector<SiteComparison> rows;
  std::vector<CdfPoint> cdf_trackers;
  std::vector<CdfPoint> cdf_load_time;  // per-site load-time reduction
  std::vector<CdfPoint> cdf_bytes;      // per-site data reduction
  double median_trackers = 0;
  std::optional<double> median_load_time_reduction;
  std::optional<double> median_bytes_reduction;
  std::optional<double> median_requests_reduction;
  std::size_t cookies_protected = 0;
  std::size_t cookies_unprotected = 0;
  std::optional<double> cookie_reduction;
};

// Even counts average the middle two. Throws std::invalid_argument when empty.
double median(std::vector<double> values);

// (unprotected - protected) / unprotected; nullopt when unprotected <= 0.
std::optional<double> reduction(double unprotected, double protected_value);

// Sorted values paired with cumulative fractions (i+1)/n.
std::vector<CdfPoint> cdf(std::vector<double> values);

std::size_t count_cookies(const std::vector<FetchReport>& reports);

// Medians and reductions over already collected runs.
SiteComparison summarize(const std::string& site,
                         const std::vector<FetchReport>& protected_runs,
                         const std::vector<FetchReport>& unprotected_runs);

// Runs `reps` fetches per mode interleaved P,U,P,U,... Failed reps are
// skipped; throws SiteUnreachable when every rep of a mode failed.
SiteComparison compare(const std::string& site, std::size_t reps, const ProxyClient& client,
                       const FetchOptions& options = {});

// Throws std::invalid_argument when `comparisons` is empty.
CorpusReport aggregate(const std::vector<SiteComparison>& comparisons);

// sites.csv, cdf_trackers.csv, cdf_loadtime.csv, cdf_bytes.csv and
// summary.json under `dir` (created if missing).
void write_report(const CorpusReport& report, const std::filesystem::path& dir);
std::string encode_summary(const CorpusReport& report);
std::string encode_cdf_csv(const std::vector<CdfPoint>& points);
std::string encode_sites_csv(const CorpusReport& report);

// One URL per line; blank lines and '#' comments skipped.
std::vector<std::string> parse_sites(std::string_view text);

}  // namespace trackguard
