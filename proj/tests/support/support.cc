#include "support.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace trackguard::testing {

TempDir::TempDir() {
  std::string pattern =
      (std::filesystem::temp_directory_path() / "trackguard-test-XXXXXX").string();
  if (!mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
}

bool oracle_matches(const std::set<std::string>& domains, const std::string& host) {
  for (const auto& domain : domains) {
    if (host == domain) return true;
    if (host.size() > domain.size() &&
        host.compare(host.size() - domain.size(), domain.size(), domain) == 0 &&
        host[host.size() - domain.size() - 1] == '.') {
      return true;
    }
  }
  return false;
}

std::vector<std::string> domain_expressions(const std::set<std::string>& domains) {
  std::vector<std::string> out;
  for (const auto& domain : domains) out.push_back(domain + "/");
  return out;
}

std::string random_label(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len) {
  static constexpr std::string_view kAlphabet = "abcde";
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
  std::string out;
  for (std::size_t i = len(rng); i > 0; --i) out += kAlphabet[pick(rng)];
  return out;
}

std::string random_host(std::mt19937_64& rng, std::size_t labels) {
  std::string host;
  for (std::size_t i = 0; i < labels; ++i) {
    if (!host.empty()) host += '.';
    host += random_label(rng, 1, 2);
  }
  return host;
}

std::string random_path(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> depth(0, 3);
  std::string path;
  for (int i = depth(rng); i > 0; --i) path += "/" + random_label(rng, 1, 4);
  if (path.empty() || rng() % 2) path += "/";
  if (rng() % 3 == 0) path += "?q=" + random_label(rng);
  return path;
}

ProxyRig::ProxyRig(FixtureCorpus corpus, const std::set<std::string>& blocklist,
                   ProxyConfig config)
    : store_(build(domain_expressions(blocklist))),
      fixture_(std::make_unique<FixtureServer>(std::move(corpus))) {
  fixture_->start();
  UpstreamResolver resolver;
  for (const auto& [host, address] : fixture_->host_map()) {
    resolver.add_override(host, address);
  }
  config.listen = {"127.0.0.1", 0};
  proxy_ = std::make_unique<FilteringProxy>(config, store_, overrides_, telemetry_,
                                            std::move(resolver));
  proxy_->start();
}

ProxyRig::~ProxyRig() {
  proxy_->stop();
  fixture_->stop();
}

ProxyClient ProxyRig::client() const {
  return ProxyClient(proxy_->address(), std::chrono::seconds(10));
}

uint64_t FakeListServer::publish(std::set<std::string> domains) {
  history_.push_back(std::move(domains));
  return version();
}

const std::set<std::string>& FakeListServer::current() const {
  static const std::set<std::string> kEmpty;
  return history_.empty() ? kEmpty : history_.back();
}

UpdateResponse FakeListServer::respond(uint64_t client_version) {
  ++requests_;
  UpdateResponse out;
  if (failures_ > 0) {
    --failures_;
    out.error = "unreachable";
    return out;
  }
  if (client_version == version()) {
    out.kind = UpdateResponse::Kind::kUnchanged;
    return out;
  }
  out.kind = UpdateResponse::Kind::kUpdate;
  out.update.to_version = version();
  const auto& target = current();
  if (client_version == 0 || client_version > version()) {
    out.update.from_version = 0;
    out.update.add = domain_expressions(target);
    return out;
  }
  const auto& base = history_[client_version - 1];
  out.update.from_version = client_version;
  for (const auto& d : target) {
    if (!base.count(d)) out.update.add.push_back(d + "/");
  }
  for (const auto& d : base) {
    if (!target.count(d)) out.update.remove.push_back(d + "/");
  }
  if (corrupt_next_diff_) {
    corrupt_next_diff_ = false;
    out.update.from_version = client_version + 1000;
    out.update.to_version = client_version + 1001;
  }
  return out;
}

FixtureResource resource(ElementHint type, const std::string& host, const std::string& path,
                         uint64_t bytes, std::vector<std::string> cookies, int latency_ms) {
  FixtureResource r;
  r.type = type;
  r.host = host;
  r.path = path;
  r.bytes = bytes;
  r.set_cookies = std::move(cookies);
  r.latency = std::chrono::milliseconds(latency_ms);
  return r;
}

FixtureCorpus cookie_corpus() {
  auto tracker = [](int n) {
    std::string host = "ads.tracker-" + std::to_string(n) + ".example";
    return resource(ElementHint::kScript, host, "/t.js", 500,
                    {"uid" + std::to_string(n) + "=x; Path=/",
                     "seen" + std::to_string(n) + "=y; Path=/; Max-Age=3600"});
  };
  const int embeds[5][2] = {{1, 2}, {2, 3}, {3, 4}, {4, 1}, {0, 0}};
  FixtureCorpus corpus;
  for (int i = 0; i < 5; ++i) {
    FixtureSite site;
    site.host = "site" + std::to_string(i + 1) + ".example";
    site.body_bytes = 2000;
    site.set_cookies = {"fp=" + std::to_string(i + 1) + "; Path=/"};
    site.resources.push_back(resource(ElementHint::kImg, site.host, "/logo.png", 800));
    for (int t : embeds[i]) {
      if (t) site.resources.push_back(tracker(t));
    }
    corpus.sites.push_back(std::move(site));
  }
  return corpus;
}

std::set<std::string> cookie_corpus_trackers() {
  return {"tracker-1.example", "tracker-2.example", "tracker-3.example",
          "tracker-4.example"};
}

}  // namespace trackguard::testing
