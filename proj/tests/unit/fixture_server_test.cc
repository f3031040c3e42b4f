#include <gtest/gtest.h>

#include <json.hpp>

#include "support.h"
#include "trackguard/errors.h"
#include "trackguard/fixture_server.h"
#include "trackguard/html_extract.h"
#include "trackguard/http_wire.h"

namespace trackguard {
namespace {

using testing::resource;

http::Response direct_get(const net::HostPort& address, const std::string& host,
                          const std::string& path, uint64_t* wire = nullptr) {
  auto socket = net::connect_tcp(address.host, address.port, std::chrono::seconds(5));
  socket.set_timeout(std::chrono::seconds(5));
  socket.write_all("GET " + path + " HTTP/1.1\r\nHost: " + host + "\r\nConnection: close\r\n\r\n");
  net::StreamReader reader(socket);
  auto response = http::read_response(reader, "GET");
  if (wire) *wire = response.wire_bytes();
  return response;
}

FixtureCorpus small_corpus() {
  FixtureSite site;
  site.host = "news.example";
  site.body_bytes = 2048;
  site.set_cookies = {"fp=1; Path=/"};
  site.resources = {
      resource(ElementHint::kScript, "tracker.example", "/t.js", 321, {"uid=9; Path=/"}),
      resource(ElementHint::kImg, "news.example", "/logo.png", 1000),
      resource(ElementHint::kIframe, "ads.example", "/frame", 10),
      resource(ElementHint::kObject, "news.example", "/movie.swf", 5),
      resource(ElementHint::kStylesheet, "cdn.news.example", "/site.css", 77),
  };
  return {{site}};
}

TEST(FixtureCorpus, ParsesBundledCorpus) {
  auto corpus = FixtureCorpus::load(TRACKGUARD_FIXTURES_DIR "/corpus.json");
  EXPECT_EQ(corpus.sites.size(), 3u);
  auto hosts = corpus.hosts();
  EXPECT_FALSE(hosts.empty());
  EXPECT_TRUE(std::is_sorted(hosts.begin(), hosts.end()));
}

TEST(FixtureCorpus, ParseFields) {
  auto corpus = FixtureCorpus::parse(R"({"sites":[{"host":"a.example","body_bytes":10,
      "latency_ms":5,"set_cookies":["x=1"],
      "resources":[{"type":"img","host":"b.example","path":"/p.gif","bytes":3,"latency_ms":7}]}]})");
  ASSERT_EQ(corpus.sites.size(), 1u);
  const auto& site = corpus.sites[0];
  EXPECT_EQ(site.url(), "http://a.example/");
  EXPECT_EQ(site.latency, std::chrono::milliseconds(5));
  EXPECT_EQ(site.set_cookies, (std::vector<std::string>{"x=1"}));
  ASSERT_EQ(site.resources.size(), 1u);
  EXPECT_EQ(site.resources[0].type, ElementHint::kImg);
  EXPECT_EQ(site.resources[0].bytes, 3u);
  EXPECT_EQ(site.resources[0].latency, std::chrono::milliseconds(7));
  EXPECT_EQ(corpus.hosts(), (std::vector<std::string>{"a.example", "b.example"}));
}

TEST(FixtureCorpus, SchemaErrors) {
  for (const char* doc : {
           "[]",
           R"({"sites":{}})",
           R"({"sites":[{}]})",
           R"({"sites":[{"host":"bad host"}]})",
           R"({"sites":[{"host":"10.0.0.1"}]})",
           R"({"sites":[{"host":"a.example","path":"nope"}]})",
           R"({"sites":[{"host":"a.example","body_bytes":-1}]})",
           R"({"sites":[{"host":"a.example","resources":[{"host":"b.example"}]}]})",
           R"({"sites":[{"host":"a.example","resources":[{"type":"other","host":"b.example"}]}]})",
           R"({"sites":[{"host":"a.example","set_cookies":["a\nb"]}]})",
           R"({"sites":[{"host":"a.example","resources":[
               {"type":"img","host":"b.example","path":"/x","bytes":1},
               {"type":"img","host":"b.example","path":"/x","bytes":2}]}]})",
       }) {
    SCOPED_TRACE(doc);
    EXPECT_THROW(FixtureCorpus::parse(doc), Error);
  }
}

TEST(FixtureServer, ServesExactBytesAndCounts) {
  FixtureServer server(small_corpus());
  server.start();
  auto hosts = server.host_map();
  ASSERT_EQ(hosts.size(), 4u);

  uint64_t wire = 0;
  auto page = direct_get(hosts.at("news.example"), "news.example", "/", &wire);
  EXPECT_EQ(page.head.status, 200);
  EXPECT_EQ(page.body.size(), 2048u);
  EXPECT_EQ(page.body, server.page_html(0));
  EXPECT_EQ(wire, server.page_response_bytes(0));
  EXPECT_EQ(page.head.headers.get_all("Set-Cookie"), (std::vector<std::string>{"fp=1; Path=/"}));
  EXPECT_EQ(page.head.headers.get("Cache-Control"), "no-store");

  auto script = direct_get(hosts.at("tracker.example"), "tracker.example", "/t.js", &wire);
  EXPECT_EQ(script.body.size(), 321u);
  EXPECT_EQ(wire, server.resource_response_bytes(0, 0));
  EXPECT_EQ(server.connections("tracker.example"), 1u);
  EXPECT_EQ(server.requests("tracker.example"), 1u);

  EXPECT_EQ(direct_get(hosts.at("ads.example"), "ads.example", "/missing").head.status, 404);
  EXPECT_EQ(server.connections("ads.example"), 1u);
  EXPECT_EQ(server.requests("ads.example"), 0u);
  EXPECT_EQ(server.connections("unknown.example"), 0u);

  server.reset_counters();
  EXPECT_EQ(server.connections("tracker.example"), 0u);
  server.stop();
}

TEST(FixtureServer, PageMarkupListsResourcesInOrder) {
  FixtureServer server(small_corpus());
  auto found = extract_subresources(server.page_html(0), "http://news.example/");
  std::vector<Subresource> expected;
  for (const auto& r : server.corpus().sites[0].resources) {
    expected.push_back({r.type, "http://" + r.host + r.path});
  }
  EXPECT_EQ(found, expected);
}

TEST(FixtureServer, MarkupGrowsPastSmallBudget) {
  auto corpus = small_corpus();
  corpus.sites[0].body_bytes = 1;
  FixtureServer server(corpus);
  EXPECT_GT(server.page_html(0).size(), 1u);
}

TEST(FixtureServer, BaseEndpoints) {
  FixtureServer server(small_corpus());
  server.start();
  auto base = server.base_address();
  auto hosts = nlohmann::json::parse(direct_get(base, "fixture", "/hosts").body);
  EXPECT_EQ(hosts["news.example"], server.host_map().at("news.example").to_string());
  direct_get(server.host_map().at("news.example"), "news.example", "/logo.png");
  auto counters = nlohmann::json::parse(direct_get(base, "fixture", "/counters").body);
  EXPECT_EQ(counters["news.example"]["requests"], 1);
  EXPECT_EQ(counters["tracker.example"]["connections"], 0);
  EXPECT_EQ(direct_get(base, "fixture", "/other").head.status, 404);

  testing::TempDir dir;
  server.write_hosts_file(dir.path() / "hosts.json");
  UpstreamResolver resolver;
  resolver.load_file(dir.path() / "hosts.json");
  EXPECT_EQ(resolver.resolve("cdn.news.example", 80), server.host_map().at("cdn.news.example"));
  server.stop();
}

TEST(FixtureServer, LatencyDelaysResponse) {
  auto corpus = small_corpus();
  corpus.sites[0].latency = std::chrono::milliseconds(150);
  FixtureServer server(corpus);
  server.start();
  auto start = std::chrono::steady_clock::now();
  direct_get(server.host_map().at("news.example"), "news.example", "/");
  EXPECT_GE(std::chrono::steady_clock::now() - start, std::chrono::milliseconds(150));
  server.stop();
}

}  // namespace
}  // namespace trackguard
