#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "support.h"
#include "trackguard/errors.h"
#include "trackguard/measurement.h"

namespace trackguard {
namespace {

using testing::ProxyRig;
using testing::resource;

TEST(Median, OddEvenAndEmpty) {
  EXPECT_EQ(median({3}), 3);
  EXPECT_EQ(median({5, 1, 3}), 3);
  EXPECT_EQ(median({0, 2, 11, 150}), 6.5);
  EXPECT_THROW(median({}), std::invalid_argument);
}

TEST(Reduction, Formula) {
  EXPECT_DOUBLE_EQ(*reduction(10, 4), 0.6);
  EXPECT_DOUBLE_EQ(*reduction(10, 10), 0.0);
  EXPECT_FALSE(reduction(0, 0).has_value());
  EXPECT_FALSE(reduction(-1, 0).has_value());
}

TEST(Cdf, StepsAndEndpoints) {
  auto single = cdf({7});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].value, 7);
  EXPECT_EQ(single[0].fraction, 1);

  auto points = cdf({150, 0, 11, 2});
  ASSERT_EQ(points.size(), 4u);
  EXPECT_EQ(points.front().value, 0);
  EXPECT_DOUBLE_EQ(points.front().fraction, 0.25);
  EXPECT_EQ(points.back().value, 150);
  EXPECT_DOUBLE_EQ(points.back().fraction, 1.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    EXPECT_LE(points[i - 1].value, points[i].value);
    EXPECT_LT(points[i - 1].fraction, points[i].fraction);
  }
  EXPECT_TRUE(cdf({}).empty());
}

FetchReport run(double load_ms, uint64_t bytes, uint64_t requests, uint64_t blocked,
                bool protected_mode = true) {
  FetchReport r;
  r.protected_mode = protected_mode;
  r.load_time_ms = load_ms;
  r.bytes = bytes;
  r.requests = requests;
  r.blocked = blocked;
  return r;
}

// The case-study page: 98 vs 219 requests and 2.8 vs 4.3 MB, bytes scaled
// by 0.001.
TEST(Summarize, CaseStudyArithmetic) {
  auto row = summarize("http://weather.example/", {run(1, 2800, 219, 121)},
                       {run(1, 4300, 219, 0, false)});
  EXPECT_EQ(row.median_protected.requests, 98);
  EXPECT_EQ(row.median_unprotected.requests, 219);
  EXPECT_NEAR(*row.reductions.requests * 100, 55.3, 0.05);
  EXPECT_NEAR(*row.reductions.bytes * 100, 34.9, 0.05);
  EXPECT_DOUBLE_EQ(*row.reductions.requests, (219.0 - 98.0) / 219.0);
  EXPECT_DOUBLE_EQ(*row.reductions.bytes, (4300.0 - 2800.0) / 4300.0);
}

TEST(Summarize, MediansOfReps) {
  auto row = summarize("s", {run(10, 100, 5, 1), run(30, 100, 5, 1), run(20, 100, 5, 1)},
                       {run(40, 200, 5, 0, false), run(60, 200, 5, 0, false)});
  EXPECT_EQ(row.reps, 3u);
  EXPECT_EQ(row.median_protected.load_time_ms, 20);
  EXPECT_EQ(row.median_unprotected.load_time_ms, 50);
  EXPECT_DOUBLE_EQ(*row.reductions.load_time, 0.6);
  EXPECT_EQ(row.trackers_blocked, 1);
  EXPECT_THROW(summarize("s", {}, {run(1, 1, 1, 0)}), std::invalid_argument);
}

SiteComparison row_with_trackers(double trackers) {
  SiteComparison row;
  row.trackers_blocked = trackers;
  return row;
}

TEST(Aggregate, TrackerCdfMedianAndMax) {
  auto report = aggregate({row_with_trackers(0), row_with_trackers(2), row_with_trackers(11),
                           row_with_trackers(150)});
  EXPECT_EQ(report.median_trackers, 6.5);
  EXPECT_EQ(report.cdf_trackers.back().value, 150);
  EXPECT_EQ(report.cdf_trackers.back().fraction, 1);
  EXPECT_THROW(aggregate({}), std::invalid_argument);
}

TEST(Aggregate, CookieTotalsAreUnions) {
  SiteComparison a;
  a.cookies_protected = {{"fp", "a.example", "/"}};
  a.cookies_unprotected = {{"fp", "a.example", "/"}, {"uid", "t.example", "/"}};
  SiteComparison b;
  b.cookies_protected = {{"fp", "b.example", "/"}};
  b.cookies_unprotected = {{"fp", "b.example", "/"}, {"uid", "t.example", "/"}};
  auto report = aggregate({a, b});
  EXPECT_EQ(report.cookies_protected, 2u);
  EXPECT_EQ(report.cookies_unprotected, 3u);
  EXPECT_DOUBLE_EQ(*report.cookie_reduction, 1.0 / 3.0);
}

TEST(Report, FilesAndEncodings) {
  auto row = summarize("http://a.example/,x", {run(1, 2800, 219, 121)},
                       {run(2, 4300, 219, 0, false)});
  auto report = aggregate({row});
  testing::TempDir dir;
  write_report(report, dir.path() / "out");
  for (const char* name :
       {"sites.csv", "cdf_trackers.csv", "cdf_loadtime.csv", "cdf_bytes.csv", "summary.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "out" / name)) << name;
  }
  auto csv = testing::read_file(dir.path() / "out" / "sites.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("site,reps,trackers_blocked"), 0u);
  EXPECT_NE(csv.find("\"http://a.example/,x\""), std::string::npos);
  EXPECT_EQ(encode_cdf_csv({{1, 0.5}, {2, 1}}), "value,cumulative_fraction\n1,0.5\n2,1\n");
  auto summary = nlohmann::json::parse(testing::read_file(dir.path() / "out" / "summary.json"));
  EXPECT_NEAR(summary["median_bytes_reduction"].get<double>(), 1500.0 / 4300.0, 1e-9);
  EXPECT_EQ(summary["sites"], 1);
}

TEST(ParseSites, SkipsBlanksAndComments) {
  EXPECT_EQ(parse_sites("# corpus\nhttp://a.example/\n\n  http://b.example/  \r\n"),
            (std::vector<std::string>{"http://a.example/", "http://b.example/"}));
}

FixtureCorpus twenty_resource_site() {
  FixtureSite site;
  site.host = "page.example";
  site.body_bytes = 4000;
  for (int i = 0; i < 12; ++i) {
    site.resources.push_back(resource(i % 3 ? ElementHint::kImg : ElementHint::kScript,
                                      "static.page.example", "/r" + std::to_string(i), 700));
  }
  for (int i = 0; i < 8; ++i) {
    site.resources.push_back(resource(i < 5 ? ElementHint::kScript : ElementHint::kIframe,
                                      "t" + std::to_string(i % 2) + ".tracker.example",
                                      "/x" + std::to_string(i), 600));
  }
  FixtureSite empty;
  empty.host = "empty.example";
  return {{site, empty}};
}

TEST(FetchPage, ProtectedBlocksListedSubresources) {
  ProxyRig rig(twenty_resource_site(), {"tracker.example"});
  auto report = fetch_page("http://page.example/", FetchMode::kProtected, rig.client());
  EXPECT_EQ(report.requests, 21u);
  EXPECT_EQ(report.blocked, 8u);
  EXPECT_EQ(report.matched, 8u);
  EXPECT_EQ(report.subresources, 20u);
  EXPECT_EQ(report.blocked_by_type, (std::map<ElementHint, uint64_t>{
                                        {ElementHint::kScript, 5}, {ElementHint::kIframe, 3}}));
  EXPECT_EQ(rig.fixture().connections("t0.tracker.example"), 0u);
  EXPECT_EQ(rig.fixture().connections("t1.tracker.example"), 0u);

  uint64_t expected = rig.fixture().page_response_bytes(0);
  for (std::size_t k = 0; k < 12; ++k) expected += rig.fixture().resource_response_bytes(0, k);
  EXPECT_EQ(report.bytes, expected);
  EXPECT_EQ(report.contacted_hosts,
            (std::set<std::string>{"page.example", "static.page.example"}));

  auto baseline = fetch_page("http://page.example/", FetchMode::kUnprotected, rig.client());
  EXPECT_EQ(baseline.blocked, 0u);
  EXPECT_EQ(baseline.matched, 8u);
  EXPECT_EQ(baseline.requests, 21u);
  EXPECT_GT(baseline.bytes, report.bytes);
  EXPECT_EQ(rig.fixture().connections("t0.tracker.example") +
                rig.fixture().connections("t1.tracker.example"),
            8u);
}

TEST(FetchPage, EmptyPage) {
  ProxyRig rig(twenty_resource_site(), {"tracker.example"});
  for (auto mode : {FetchMode::kProtected, FetchMode::kUnprotected}) {
    auto report = fetch_page("http://empty.example/", mode, rig.client());
    EXPECT_EQ(report.requests, 1u);
    EXPECT_EQ(report.blocked, 0u);
  }
}

TEST(FetchPage, UnreachableSite) {
  ProxyRig rig(twenty_resource_site(), {"tracker.example"});
  EXPECT_THROW(fetch_page("http://page.example/missing", FetchMode::kProtected, rig.client()),
               SiteUnreachable);
}

// Byte budget: four tracker responses carry 39% of the page's wire bytes.
FixtureCorpus byte_budget_site() {
  FixtureSite site;
  site.host = "budget.example";
  site.body_bytes = 5000;
  for (int i = 0; i < 4; ++i) {
    site.resources.push_back(
        resource(ElementHint::kImg, "budget.example", "/i" + std::to_string(i), 2500));
  }
  for (int i = 0; i < 4; ++i) {
    site.resources.push_back(resource(ElementHint::kScript, "cdn.tracker.example",
                                      "/s" + std::to_string(i), 2380));
  }
  return {{site}};
}

TEST(Compare, DeterministicFixtureByteReduction) {
  ProxyRig rig(byte_budget_site(), {"tracker.example"});
  const auto& f = rig.fixture();
  double all = static_cast<double>(f.page_response_bytes(0));
  double trackers = 0;
  for (std::size_t k = 0; k < 8; ++k) {
    double b = static_cast<double>(f.resource_response_bytes(0, k));
    all += b;
    if (k >= 4) trackers += b;
  }
  double truth = trackers / all;
  ASSERT_NEAR(truth, 0.39, 0.005);

  auto one = compare("http://budget.example/", 1, rig.client());
  EXPECT_EQ(one.reps, 1u);
  EXPECT_DOUBLE_EQ(*one.reductions.bytes, truth);

  auto four = compare("http://budget.example/", 4, rig.client());
  EXPECT_EQ(four.median_protected.bytes, one.median_protected.bytes);
  EXPECT_EQ(four.median_unprotected.bytes, one.median_unprotected.bytes);
  EXPECT_NEAR(*four.reductions.bytes, 0.39, 0.005);
  EXPECT_EQ(four.trackers_blocked, 4);
  EXPECT_LE(four.median_protected.requests, four.median_unprotected.requests);
}

TEST(Compare, UnreachableSiteThrows) {
  ProxyRig rig(byte_budget_site(), {"tracker.example"});
  EXPECT_THROW(compare("http://budget.example/none", 2, rig.client()), SiteUnreachable);
  EXPECT_THROW(compare("http://budget.example/", 0, rig.client()), std::invalid_argument);
}

TEST(CountCookies, CookieCorpusUnion) {
  auto corpus = testing::cookie_corpus();
  ProxyRig rig(corpus, testing::cookie_corpus_trackers());
  std::vector<FetchReport> protected_runs;
  std::vector<FetchReport> unprotected_runs;
  for (const auto& site : corpus.sites) {
    protected_runs.push_back(fetch_page(site.url(), FetchMode::kProtected, rig.client()));
    unprotected_runs.push_back(fetch_page(site.url(), FetchMode::kUnprotected, rig.client()));
  }
  EXPECT_EQ(count_cookies(unprotected_runs), 13u);
  EXPECT_EQ(count_cookies(protected_runs), 5u);
  std::reverse(unprotected_runs.begin(), unprotected_runs.end());
  EXPECT_EQ(count_cookies(unprotected_runs), 13u);
}

}  // namespace
}  // namespace trackguard
