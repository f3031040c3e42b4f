#include "trackguard/measurement.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "trackguard/errors.h"

namespace trackguard {
namespace {

std::string number(double value) {
  std::ostringstream out;
  out.precision(10);
  out << value;
  return out.str();
}

std::string optional_number(const std::optional<double>& value) {
  return value ? number(*value) : "";
}

nlohmann::json optional_json(const std::optional<double>& value) {
  return value ? nlohmann::json(*value) : nlohmann::json(nullptr);
}

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <typename F>
double median_of(const std::vector<FetchReport>& runs, F metric) {
  std::vector<double> values;
  values.reserve(runs.size());
  for (const auto& run : runs) values.push_back(metric(run));
  return median(std::move(values));
}

PageMetrics medians(const std::vector<FetchReport>& runs) {
  return {
      median_of(runs, [](const FetchReport& r) { return r.load_time_ms; }),
      median_of(runs, [](const FetchReport& r) { return static_cast<double>(r.bytes); }),
      median_of(runs,
                [](const FetchReport& r) { return static_cast<double>(r.requests - r.blocked); }),
      median_of(runs,
                [](const FetchReport& r) { return static_cast<double>(r.cookies.size()); }),
  };
}

std::optional<double> optional_median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  return median(std::move(values));
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << contents;
  if (!out.flush()) throw Error("cannot write " + path.string());
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sample");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::optional<double> reduction(double unprotected, double protected_value) {
  if (unprotected <= 0) return std::nullopt;
  return (unprotected - protected_value) / unprotected;
}

std::vector<CdfPoint> cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> points;
  points.reserve(values.size());
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    points.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return points;
}

std::size_t count_cookies(const std::vector<FetchReport>& reports) {
  std::vector<std::set<CookieKey>> sets;
  sets.reserve(reports.size());
  for (const auto& report : reports) sets.push_back(report.cookies);
  return count_cookies(sets);
}

SiteComparison summarize(const std::string& site,
                         const std::vector<FetchReport>& protected_runs,
                         const std::vector<FetchReport>& unprotected_runs) {
  if (protected_runs.empty() || unprotected_runs.empty()) {
    throw std::invalid_argument("summarize needs at least one run per mode");
  }
  SiteComparison out;
  out.site = site;
  out.reps = std::max(protected_runs.size(), unprotected_runs.size());
  out.median_protected = medians(protected_runs);
  out.median_unprotected = medians(unprotected_runs);
  out.trackers_blocked = median_of(
      protected_runs, [](const FetchReport& r) { return static_cast<double>(r.blocked); });
  const auto& p = out.median_protected;
  const auto& u = out.median_unprotected;
  out.reductions = {reduction(u.load_time_ms, p.load_time_ms), reduction(u.bytes, p.bytes),
                    reduction(u.requests, p.requests), reduction(u.cookies, p.cookies)};
  for (const auto& run : protected_runs) {
    out.cookies_protected.insert(run.cookies.begin(), run.cookies.end());
  }
  for (const auto& run : unprotected_runs) {
    out.cookies_unprotected.insert(run.cookies.begin(), run.cookies.end());
  }
  return out;
}

SiteComparison compare(const std::string& site, std::size_t reps, const ProxyClient& client,
                       const FetchOptions& options) {
  if (reps == 0) throw std::invalid_argument("reps must be at least 1");
  std::vector<FetchReport> protected_runs;
  std::vector<FetchReport> unprotected_runs;
  std::string last_error;
  for (std::size_t i = 0; i < reps; ++i) {
    for (FetchMode mode : {FetchMode::kProtected, FetchMode::kUnprotected}) {
      try {
        auto report = fetch_page(site, mode, client, options);
        (mode == FetchMode::kProtected ? protected_runs : unprotected_runs)
            .push_back(std::move(report));
      } catch (const SiteUnreachable& e) {
        last_error = e.what();
      }
    }
  }
  if (protected_runs.empty() || unprotected_runs.empty()) {
    throw SiteUnreachable(last_error.empty() ? site : last_error);
  }
  return summarize(site, protected_runs, unprotected_runs);
}

CorpusReport aggregate(const std::vector<SiteComparison>& comparisons) {
  if (comparisons.empty()) throw std::invalid_argument("aggregate needs at least one site");
  CorpusReport report;
  report.rows = comparisons;
  std::vector<double> trackers;
  std::vector<double> load_time;
  std::vector<double> bytes;
  std::vector<double> requests;
  std::set<CookieKey> cookies_p;
  std::set<CookieKey> cookies_u;
  for (const auto& row : comparisons) {
    trackers.push_back(row.trackers_blocked);
    if (row.reductions.load_time) load_time.push_back(*row.reductions.load_time);
    if (row.reductions.bytes) bytes.push_back(*row.reductions.bytes);
    if (row.reductions.requests) requests.push_back(*row.reductions.requests);
    cookies_p.insert(row.cookies_protected.begin(), row.cookies_protected.end());
    cookies_u.insert(row.cookies_unprotected.begin(), row.cookies_unprotected.end());
  }
  report.cdf_trackers = cdf(trackers);
  report.cdf_load_time = cdf(load_time);
  report.cdf_bytes = cdf(bytes);
  report.median_trackers = median(trackers);
  report.median_load_time_reduction = optional_median(load_time);
  report.median_bytes_reduction = optional_median(bytes);
  report.median_requests_reduction = optional_median(requests);
  report.cookies_protected = cookies_p.size();
  report.cookies_unprotected = cookies_u.size();
  report.cookie_reduction = reduction(static_cast<double>(cookies_u.size()),
                                      static_cast<double>(cookies_p.size()));
  return report;
}

std::string encode_cdf_csv(const std::vector<CdfPoint>& points) {
  std::string out = "value,cumulative_fraction\n";
  for (const auto& point : points) {
    out += number(point.value) + "," + number(point.fraction) + "\n";
  }
  return out;
}

std::string encode_sites_csv(const CorpusReport& report) {
  std::string out =
      "site,reps,trackers_blocked,"
      "median_load_time_ms_protected,median_load_time_ms_unprotected,"
      "median_bytes_protected,median_bytes_unprotected,"
      "median_requests_protected,median_requests_unprotected,"
      "median_cookies_protected,median_cookies_unprotected,"
      "load_time_reduction,bytes_reduction,requests_reduction,cookies_reduction\n";
  for (const auto& row : report.rows) {
    const auto& p = row.median_protected;
    const auto& u = row.median_unprotected;
    out += csv_field(row.site) + "," + std::to_string(row.reps) + "," +
           number(row.trackers_blocked) + "," + number(p.load_time_ms) + "," +
           number(u.load_time_ms) + "," + number(p.bytes) + "," + number(u.bytes) + "," +
           number(p.requests) + "," + number(u.requests) + "," + number(p.cookies) + "," +
           number(u.cookies) + "," + optional_number(row.reductions.load_time) + "," +
           optional_number(row.reductions.bytes) + "," +
           optional_number(row.reductions.requests) + "," +
           optional_number(row.reductions.cookies) + "\n";
  }
  return out;
}

std::string encode_summary(const CorpusReport& report) {
  nlohmann::json out = {
      {"sites", report.rows.size()},
      {"median_trackers", report.median_trackers},
      {"median_load_time_reduction", optional_json(report.median_load_time_reduction)},
      {"median_bytes_reduction", optional_json(report.median_bytes_reduction)},
      {"median_requests_reduction", optional_json(report.median_requests_reduction)},
      {"cookies",
       {{"protected", report.cookies_protected},
        {"unprotected", report.cookies_unprotected},
        {"reduction", optional_json(report.cookie_reduction)}}},
  };
  return out.dump(2) + "\n";
}

void write_report(const CorpusReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "sites.csv", encode_sites_csv(report));
  write_file(dir / "cdf_trackers.csv", encode_cdf_csv(report.cdf_trackers));
  write_file(dir / "cdf_loadtime.csv", encode_cdf_csv(report.cdf_load_time));
  write_file(dir / "cdf_bytes.csv", encode_cdf_csv(report.cdf_bytes));
  write_file(dir / "summary.json", encode_summary(report));
}

std::vector<std::string> parse_sites(std::string_view text) {
  std::vector<std::string> sites;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    auto end = line.find_last_not_of(" \t\r");
    sites.push_back(line.substr(start, end - start + 1));
  }
  return sites;
}

}  // namespace trackguard
