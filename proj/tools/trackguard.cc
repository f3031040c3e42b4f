#include <csignal>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trackguard/errors.h"
#include "trackguard/fixture_server.h"
#include "trackguard/list_compiler.h"
#include "trackguard/measurement.h"
#include "trackguard/proxy_service.h"

namespace {

using namespace trackguard;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// "45m", "30s", "2h", "1500ms"; a bare number is seconds.
std::chrono::milliseconds parse_duration(const std::string& text) {
  std::size_t used = 0;
  long long value = 0;
  try {
    value = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw CLI::ValidationError("duration", "not a duration: " + text);
  }
  std::string unit = text.substr(used);
  if (value <= 0) throw CLI::ValidationError("duration", "must be positive: " + text);
  if (unit == "ms") return std::chrono::milliseconds(value);
  if (unit.empty() || unit == "s") return std::chrono::seconds(value);
  if (unit == "m") return std::chrono::minutes(value);
  if (unit == "h") return std::chrono::hours(value);
  throw CLI::ValidationError("duration", "unknown unit in " + text);
}

void wait_for_shutdown_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

void block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

struct CompileArgs {
  std::string in;
  std::string format = "disconnect";
  std::vector<std::string> include_categories;
  std::vector<std::string> exclude_categories{"Content"};
  std::string out;
  uint64_t version = 1;
};

int run_compile(const CompileArgs& args) {
  std::string text = read_file(args.in);
  DomainList list;
  if (args.format == "disconnect") {
    CategoryFilter filter;
    filter.include = {args.include_categories.begin(), args.include_categories.end()};
    filter.exclude = {args.exclude_categories.begin(), args.exclude_categories.end()};
    list = parse_disconnect(text, filter);
  } else {
    list = parse_plain(text);
  }
  ListUpdate snapshot = compile(list, args.version);
  std::string bytes = encode_snapshot_file(snapshot);
  if (args.out.empty() || args.out == "-") {
    std::cout << bytes;
  } else {
    save_snapshot(make_store(snapshot.to_version, snapshot.add), args.out);
  }
  std::cerr << "compiled " << snapshot.add.size() << " expressions (version "
            << snapshot.to_version << ")\n";
  return 0;
}

struct ProxyArgs {
  std::string listen = "127.0.0.1:8888";
  std::string snapshot;
  std::string update_url;
  std::string update_interval = "45m";
  bool third_party_only = false;
  std::string control;
  int block_status = 403;
  std::string overrides_file;
  std::string hosts;
};

int run_proxy(const ProxyArgs& args) {
  ServiceConfig config;
  config.proxy.listen = net::HostPort::parse(args.listen);
  config.proxy.third_party_only = args.third_party_only;
  config.proxy.block_status = args.block_status;
  if (!args.snapshot.empty()) config.snapshot = args.snapshot;
  if (!args.update_url.empty()) config.update_url = args.update_url;
  config.update_interval = parse_duration(args.update_interval);
  if (!args.control.empty()) config.control = net::HostPort::parse(args.control);
  if (!args.overrides_file.empty()) config.overrides_file = args.overrides_file;
  if (!args.hosts.empty()) config.hosts_file = args.hosts;

  block_shutdown_signals();
  ProxyService service(config);
  service.start();
  auto store = service.store().current();
  std::cerr << "proxy listening on " << service.proxy().address().to_string() << " (list v"
            << store->version() << ", " << store->expression_count() << " expressions)\n";
  if (service.control()) {
    std::cerr << "control API on " << service.control()->address().to_string() << "\n";
  }
  wait_for_shutdown_signal();
  service.stop();
  return 0;
}

struct MeasureArgs {
  std::string sites;
  std::size_t reps = 10;
  std::string proxy = "127.0.0.1:8888";
  std::string out = "report";
  std::size_t per_host = 6;
  bool live = false;
  std::size_t jobs = 1;
};

int run_measure(const MeasureArgs& args) {
  std::vector<std::string> sites = parse_sites(read_file(args.sites));
  if (sites.empty()) throw Error("no sites in " + args.sites);
  ProxyClient client(net::HostPort::parse(args.proxy));
  FetchOptions options;
  options.per_host_parallelism = args.per_host;

  std::vector<std::optional<SiteComparison>> results(sites.size());
  std::size_t jobs = args.live ? std::max<std::size_t>(1, args.jobs) : 1;
  for (std::size_t start = 0; start < sites.size(); start += jobs) {
    std::vector<std::future<void>> batch;
    for (std::size_t i = start; i < std::min(sites.size(), start + jobs); ++i) {
      batch.push_back(std::async(std::launch::async, [&, i] {
        try {
          results[i] = compare(sites[i], args.reps, client, options);
        } catch (const SiteUnreachable& e) {
          std::cerr << "skipping " << sites[i] << ": " << e.what() << "\n";
        }
      }));
    }
    for (auto& f : batch) f.get();
  }

  std::vector<SiteComparison> rows;
  for (auto& result : results) {
    if (result) rows.push_back(std::move(*result));
  }
  if (rows.empty()) throw Error("every site was unreachable");
  CorpusReport report = aggregate(rows);
  write_report(report, args.out);
  std::cout << encode_summary(report);
  return 0;
}

struct FixtureArgs {
  std::string listen = "127.0.0.1:9000";
  std::string corpus;
  std::string hosts_out;
};

int run_fixture(const FixtureArgs& args) {
  block_shutdown_signals();
  FixtureServer server(FixtureCorpus::load(args.corpus));
  server.start(net::HostPort::parse(args.listen));
  if (!args.hosts_out.empty()) server.write_hosts_file(args.hosts_out);
  std::cerr << "fixture corpus (" << server.corpus().sites.size() << " sites) on "
            << server.base_address().to_string() << "\n";
  std::cout << server.hosts_json() << std::flush;
  wait_for_shutdown_signal();
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trackguard: blocklist-driven tracking protection proxy"};
  app.require_subcommand(1);

  CompileArgs compile_args;
  auto* compile_cmd = app.add_subcommand("compile", "Compile a domain list into a snapshot");
  compile_cmd->add_option("--in", compile_args.in, "Source list")->required()->check(CLI::ExistingFile);
  compile_cmd->add_option("--format", compile_args.format, "disconnect or plain")
      ->check(CLI::IsMember({"disconnect", "plain"}));
  compile_cmd->add_option("--include-category", compile_args.include_categories,
                          "Only ingest these categories");
  compile_cmd->add_option("--exclude-category", compile_args.exclude_categories,
                          "Skip these categories")
      ->capture_default_str();
  compile_cmd->add_option("--version", compile_args.version, "Snapshot version")
      ->check(CLI::PositiveNumber);
  compile_cmd->add_option("--out", compile_args.out, "Snapshot file (default stdout)");

  ProxyArgs proxy_args;
  auto* proxy_cmd = app.add_subcommand("proxy", "Run the filtering proxy");
  proxy_cmd->add_option("--listen", proxy_args.listen)->capture_default_str();
  proxy_cmd->add_option("--snapshot", proxy_args.snapshot, "Snapshot file");
  proxy_cmd->add_option("--update-url", proxy_args.update_url, "http:// update endpoint");
  proxy_cmd->add_option("--update-interval", proxy_args.update_interval)->capture_default_str();
  proxy_cmd->add_flag("--third-party-only", proxy_args.third_party_only,
                      "Exempt same-site requests");
  proxy_cmd->add_option("--control", proxy_args.control, "Control API address");
  proxy_cmd->add_option("--block-status", proxy_args.block_status)
      ->check(CLI::Range(400, 599))
      ->capture_default_str();
  proxy_cmd->add_option("--overrides-file", proxy_args.overrides_file);
  proxy_cmd->add_option("--hosts", proxy_args.hosts, "JSON host -> ip:port map")
      ->check(CLI::ExistingFile);

  MeasureArgs measure_args;
  auto* measure_cmd = app.add_subcommand("measure", "Compare page loads with and without protection");
  measure_cmd->add_option("--sites", measure_args.sites, "One URL per line")
      ->required()
      ->check(CLI::ExistingFile);
  measure_cmd->add_option("--reps", measure_args.reps)->check(CLI::PositiveNumber)->capture_default_str();
  measure_cmd->add_option("--proxy", measure_args.proxy)->capture_default_str();
  measure_cmd->add_option("--out", measure_args.out)->capture_default_str();
  measure_cmd->add_option("--per-host", measure_args.per_host, "Parallel fetches per host")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  measure_cmd->add_flag("--live", measure_args.live, "Real sites; allows --jobs");
  measure_cmd->add_option("--jobs", measure_args.jobs, "Sites measured concurrently (live only)")
      ->check(CLI::PositiveNumber);

  FixtureArgs fixture_args;
  auto* fixture_cmd = app.add_subcommand("fixture", "Serve a deterministic fixture corpus");
  fixture_cmd->add_option("--listen", fixture_args.listen)->capture_default_str();
  fixture_cmd->add_option("--corpus", fixture_args.corpus)->required()->check(CLI::ExistingFile);
  fixture_cmd->add_option("--hosts-out", fixture_args.hosts_out, "Write the host map here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (compile_cmd->parsed()) return run_compile(compile_args);
    if (proxy_cmd->parsed()) return run_proxy(proxy_args);
    if (measure_cmd->parsed()) return run_measure(measure_args);
    if (fixture_cmd->parsed()) return run_fixture(fixture_args);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "trackguard: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
