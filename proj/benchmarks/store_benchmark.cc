#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "trackguard/blocklist_store.h"
#include "trackguard/policy.h"
#include "trackguard/url.h"

namespace {

using namespace trackguard;

std::vector<std::string> synthetic_domains(std::size_t n) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> letter('a', 'z');
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string label;
    for (int k = 0; k < 8; ++k) label += static_cast<char>(letter(rng));
    out.push_back(label + "-" + std::to_string(i) + ".example/");
  }
  return out;
}

const std::vector<std::string>& sample_urls() {
  static const std::vector<std::string> urls = {
      "http://www.news.example/2015/world/story.html?ref=home",
      "https://cdn.static.example/assets/js/app.min.js",
      "http://a.b.c.d.e.f.tracker.example/pixel.gif?u=42&t=9",
      "HTTP://WWW.Example.COM:80/%7Euser/../index.html#top",
      "http://3279880203/path/to/resource",
  };
  return urls;
}

void BM_Canonicalize(benchmark::State& state) {
  const auto& urls = sample_urls();
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_and_canonicalize(urls[i++ % urls.size()]));
  }
}
BENCHMARK(BM_Canonicalize);

void BM_LookupExpressions(benchmark::State& state) {
  std::vector<CanonicalUrl> parsed;
  for (const auto& url : sample_urls()) parsed.push_back(parse_and_canonicalize(url));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(lookup_expressions(parsed[i++ % parsed.size()]));
  }
}
BENCHMARK(BM_LookupExpressions);

void BM_Build(benchmark::State& state) {
  auto domains = synthetic_domains(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build(domains));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Build)->Arg(1500)->Arg(20000);

void BM_Lookup(benchmark::State& state) {
  auto domains = synthetic_domains(static_cast<std::size_t>(state.range(0)));
  PrefixStore store = build(domains);
  std::vector<CanonicalUrl> urls;
  for (std::size_t i = 0; i < 64; ++i) {
    std::string host = i % 4 == 0 ? "ads." + domains[i].substr(0, domains[i].size() - 1)
                                   : "miss" + std::to_string(i) + ".example";
    urls.push_back(parse_and_canonicalize("http://" + host + "/a/b/c.js?x=1"));
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(lookup(store, urls[i++ % urls.size()]));
}
BENCHMARK(BM_Lookup)->Arg(1500)->Arg(20000);

void BM_Classify(benchmark::State& state) {
  auto domains = synthetic_domains(1500);
  PrefixStore store = build(domains);
  OverrideSet overrides;
  overrides.set("news.example");
  RequestMeta request;
  request.url = parse_and_canonicalize("http://cdn." + domains[17] + "lib.js");
  request.first_party_host = "www.shop.example";
  PolicyConfig config;
  config.third_party_only = state.range(0) != 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify(request, store, overrides, config));
  }
}
BENCHMARK(BM_Classify)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
