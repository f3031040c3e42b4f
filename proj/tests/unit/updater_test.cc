#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <thread>

#include "support.h"
#include "trackguard/errors.h"
#include "trackguard/http_wire.h"
#include "trackguard/list_update.h"
#include "trackguard/net.h"
#include "trackguard/updater.h"

namespace trackguard {
namespace {

using namespace std::chrono_literals;
using testing::FakeListServer;

UpdaterState state_for(std::chrono::milliseconds interval = 45min) {
  UpdaterState state;
  state.endpoint = "fake";
  state.interval = interval;
  return state;
}

UpdateTransport transport_for(FakeListServer& server) {
  return [&server](uint64_t version) { return server.respond(version); };
}

TEST(Backoff, DoublesUpToEightIntervals) {
  auto interval = std::chrono::milliseconds(45min);
  EXPECT_EQ(ListUpdater::backoff_delay(interval, 0), interval);
  EXPECT_EQ(ListUpdater::backoff_delay(interval, 1), 2 * interval);
  EXPECT_EQ(ListUpdater::backoff_delay(interval, 2), 4 * interval);
  EXPECT_EQ(ListUpdater::backoff_delay(interval, 3), 8 * interval);
  EXPECT_EQ(ListUpdater::backoff_delay(interval, 4), 8 * interval);
  EXPECT_EQ(ListUpdater::backoff_delay(interval, 1000), 8 * interval);
}

TEST(ListUpdater, FirstCycleFetchesSnapshot) {
  FakeListServer server;
  server.publish({"a.example", "b.example"});
  StoreHandle store;
  ListUpdater updater(state_for(), store, transport_for(server));
  EXPECT_EQ(updater.run_once(), CycleOutcome::kUpdated);
  EXPECT_EQ(store.current()->version(), 1u);
  EXPECT_EQ(store.current()->expression_count(), 2u);
  auto state = updater.state();
  EXPECT_EQ(state.current_version, 1u);
  EXPECT_TRUE(state.last_success.has_value());
  EXPECT_EQ(state.consecutive_failures, 0u);
}

TEST(ListUpdater, UnchangedKeepsStore) {
  FakeListServer server;
  server.publish({"a.example"});
  StoreHandle store;
  ListUpdater updater(state_for(), store, transport_for(server));
  updater.run_once();
  auto before = store.current();
  EXPECT_EQ(updater.run_once(), CycleOutcome::kUnchanged);
  EXPECT_EQ(store.current(), before);
}

TEST(ListUpdater, AppliesDiff) {
  FakeListServer server;
  server.publish({"a.example", "b.example"});
  StoreHandle store;
  ListUpdater updater(state_for(), store, transport_for(server));
  updater.run_once();
  server.publish({"b.example", "c.example"});
  EXPECT_EQ(updater.run_once(), CycleOutcome::kUpdated);
  EXPECT_EQ(store.current()->version(), 2u);
  EXPECT_EQ(store.current()->expressions(),
            (std::vector<std::string>{"b.example/", "c.example/"}));
}

TEST(ListUpdater, FailureKeepsStaleStoreAndBacksOff) {
  FakeListServer server;
  server.publish({"a.example"});
  StoreHandle store;
  auto interval = std::chrono::milliseconds(10min);
  ListUpdater updater(state_for(interval), store, transport_for(server));
  updater.run_once();
  auto before = store.current();
  server.publish({"z.example"});
  server.fail_next(5);
  for (unsigned i = 1; i <= 5; ++i) {
    EXPECT_EQ(updater.run_once(), CycleOutcome::kFailed);
    EXPECT_EQ(updater.state().consecutive_failures, i);
    EXPECT_EQ(store.current(), before);
  }
  EXPECT_EQ(updater.next_delay(), 8 * interval);
  EXPECT_EQ(updater.run_once(), CycleOutcome::kUpdated);
  EXPECT_EQ(updater.state().consecutive_failures, 0u);
  EXPECT_EQ(updater.next_delay(), interval);
  EXPECT_EQ(store.current()->expressions(), (std::vector<std::string>{"z.example/"}));
}

TEST(ListUpdater, VersionMismatchFallsBackToSnapshot) {
  FakeListServer server;
  server.publish({"a.example"});
  StoreHandle store;
  ListUpdater updater(state_for(), store, transport_for(server));
  updater.run_once();
  server.publish({"a.example", "b.example"});
  server.corrupt_next_diff();
  unsigned before = server.requests();
  EXPECT_EQ(updater.run_once(), CycleOutcome::kUpdated);
  EXPECT_EQ(server.requests() - before, 2u);
  EXPECT_EQ(store.current()->version(), 2u);
  EXPECT_EQ(store.current()->expressions(),
            (std::vector<std::string>{"a.example/", "b.example/"}));
}

TEST(ListUpdater, InvalidPayloadCountsAsFailure) {
  StoreHandle store;
  ListUpdater updater(state_for(), store, [](uint64_t) {
    UpdateResponse r;
    r.kind = UpdateResponse::Kind::kUpdate;
    r.update = ListUpdate{0, 1, {"Not Canonical"}, {}};
    return r;
  });
  EXPECT_EQ(updater.run_once(), CycleOutcome::kFailed);
  EXPECT_EQ(updater.state().consecutive_failures, 1u);
  EXPECT_EQ(store.current()->version(), 0u);
}

TEST(ListUpdater, StartRunsImmediatelyOnEmptyStore) {
  FakeListServer server;
  server.publish({"a.example"});
  StoreHandle store;
  ListUpdater updater(state_for(1h), store, transport_for(server));
  updater.start();
  for (int i = 0; i < 200 && store.current()->version() == 0; ++i) {
    std::this_thread::sleep_for(10ms);
  }
  EXPECT_EQ(store.current()->version(), 1u);
  server.publish({"b.example"});
  updater.trigger();
  for (int i = 0; i < 200 && store.current()->version() == 1; ++i) {
    std::this_thread::sleep_for(10ms);
  }
  EXPECT_EQ(store.current()->version(), 2u);
  updater.stop();
}

TEST(ListUpdaterProperty, SnapshotPlusDiffsEqualsDirectBuild) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    FakeListServer server;
    StoreHandle store;
    ListUpdater updater(state_for(), store, transport_for(server));
    std::set<std::string> domains;
    for (int i = 0; i < 20; ++i) domains.insert(testing::random_host(rng, 2));
    server.publish(domains);
    updater.run_once();
    int diffs = rng() % 21;
    for (int d = 0; d < diffs; ++d) {
      std::set<std::string> next;
      for (const auto& domain : domains) {
        if (rng() % 4) next.insert(domain);
      }
      for (int i = rng() % 5; i > 0; --i) next.insert(testing::random_host(rng, 3));
      domains = next;
      server.publish(domains);
      if (rng() % 10 == 0) server.corrupt_next_diff();
      ASSERT_EQ(updater.run_once(), CycleOutcome::kUpdated);
    }
    PrefixStore direct = apply_update(
        PrefixStore{}, ListUpdate{0, server.version(), testing::domain_expressions(domains), {}});
    EXPECT_EQ(*store.current(), direct);
  }
}

// Serves the fake list server over HTTP on a loopback port.
class HttpListServer {
 public:
  explicit HttpListServer(FakeListServer& list) : list_(list) {
    server_.start({"127.0.0.1", 0}, [this](net::Socket& client) { serve(client); });
  }
  ~HttpListServer() { server_.stop(); }

  std::string url(const std::string& path = "/list") const {
    return "http://" + server_.address().to_string() + path;
  }
  std::string last_target() const {
    std::lock_guard lock(mu_);
    return last_target_;
  }
  std::atomic<int> status_override{0};

 private:
  void serve(net::Socket& client) {
    net::StreamReader reader(client);
    auto raw = reader.read_head();
    if (!raw) return;
    auto head = http::parse_request_head(*raw);
    {
      std::lock_guard lock(mu_);
      last_target_ = head.target;
    }
    std::string out;
    if (status_override) {
      out = "HTTP/1.1 " + std::to_string(status_override.load()) +
            " X\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";
    } else {
      auto pos = head.target.find("version=");
      uint64_t version = std::stoull(head.target.substr(pos + 8));
      std::lock_guard lock(mu_);
      auto response = list_.respond(version);
      if (response.kind == UpdateResponse::Kind::kUnchanged) {
        out = "HTTP/1.1 304 Not Modified\r\nConnection: close\r\n\r\n";
      } else {
        std::string body = encode_update(response.update);
        out = "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: " +
              std::to_string(body.size()) + "\r\nConnection: close\r\n\r\n" + body;
      }
    }
    client.write_all(out);
  }

  FakeListServer& list_;
  mutable std::mutex mu_;
  std::string last_target_;
  net::TcpServer server_;
};

TEST(HttpTransport, SnapshotDiffAndUnchanged) {
  FakeListServer list;
  list.publish({"a.example"});
  HttpListServer http(list);
  auto transport = make_http_transport(http.url());

  auto first = transport(0);
  EXPECT_EQ(http.last_target(), "/list?version=0");
  ASSERT_EQ(first.kind, UpdateResponse::Kind::kUpdate);
  EXPECT_TRUE(first.update.is_snapshot());
  EXPECT_EQ(first.update.add, (std::vector<std::string>{"a.example/"}));

  EXPECT_EQ(transport(1).kind, UpdateResponse::Kind::kUnchanged);

  list.publish({"b.example"});
  auto diff = transport(1);
  ASSERT_EQ(diff.kind, UpdateResponse::Kind::kUpdate);
  EXPECT_EQ(diff.update.from_version, 1u);
  EXPECT_EQ(diff.update.to_version, 2u);
}

TEST(HttpTransport, QueryAppendsToExistingParameters) {
  FakeListServer list;
  list.publish({"a.example"});
  HttpListServer http(list);
  auto transport = make_http_transport(http.url("/list?channel=base"));
  transport(0);
  EXPECT_EQ(http.last_target(), "/list?channel=base&version=0");
}

TEST(HttpTransport, ErrorsBecomeFailures) {
  FakeListServer list;
  list.publish({"a.example"});
  HttpListServer http(list);
  http.status_override = 500;
  EXPECT_EQ(make_http_transport(http.url())(0).kind, UpdateResponse::Kind::kFailure);

  net::HostPort dead;
  {
    net::TcpServer probe;
    probe.start({"127.0.0.1", 0}, [](net::Socket&) {});
    dead = probe.address();
    probe.stop();
  }
  auto refused = make_http_transport("http://" + dead.to_string() + "/", 500ms)(0);
  EXPECT_EQ(refused.kind, UpdateResponse::Kind::kFailure);
  EXPECT_FALSE(refused.error.empty());
}

TEST(HttpTransport, RejectsNonHttpEndpoints) {
  EXPECT_THROW(make_http_transport("https://lists.example/"), InvalidUpdate);
  EXPECT_THROW(make_http_transport("ftp://lists.example/"), MalformedUrl);
}

TEST(HttpTransport, DrivesUpdaterEndToEnd) {
  FakeListServer list;
  list.publish({"a.example"});
  HttpListServer http(list);
  StoreHandle store;
  UpdaterState state = state_for();
  state.endpoint = http.url();
  ListUpdater updater(state, store, make_http_transport(http.url()));
  EXPECT_EQ(updater.run_once(), CycleOutcome::kUpdated);
  list.publish({"a.example", "c.example"});
  EXPECT_EQ(updater.run_once(), CycleOutcome::kUpdated);
  EXPECT_EQ(updater.run_once(), CycleOutcome::kUnchanged);
  EXPECT_EQ(store.current()->expression_count(), 2u);
}

}  // namespace
}  // namespace trackguard
