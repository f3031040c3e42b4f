#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "trackguard/blocklist_store.h"
#include "trackguard/control_api.h"
#include "trackguard/filtering_proxy.h"
#include "trackguard/policy.h"
#include "trackguard/updater.h"

namespace trackguard {

struct ServiceConfig {
  ProxyConfig proxy;
  // Snapshot file loaded at startup. Without one the store starts empty and
  // the proxy relays everything until the first update lands.
  std::optional<std::filesystem::path> snapshot;
  std::optional<std::string> update_url;
  std::chrono::milliseconds update_interval = kDefaultUpdateInterval;
  std::optional<net::HostPort> control;
  // Defaults to overrides.json beside the snapshot.
  std::optional<std::filesystem::path> overrides_file;
  std::optional<std::filesystem::path> hosts_file;
};

// The proxy process: store, overrides, telemetry, updater, proxy listener
// and control API wired together.
class ProxyService {
 public:
  // Loads the snapshot, overrides and hosts file. Throws CorruptSnapshot or
  // Error on any startup problem.
  explicit ProxyService(ServiceConfig config);
  ~ProxyService();

  void start();
  void stop();

  const ServiceConfig& config() const { return config_; }
  StoreHandle& store() { return store_; }
  OverrideSet& overrides() { return overrides_; }
  Telemetry& telemetry() { return telemetry_; }
  FilteringProxy& proxy() { return *proxy_; }
  ListUpdater* updater() { return updater_.get(); }
  ControlApi* control() { return control_.get(); }
  const std::optional<std::filesystem::path>& overrides_path() const {
    return overrides_path_;
  }

 private:
  std::string config_echo() const;

  ServiceConfig config_;
  StoreHandle store_;
  OverrideSet overrides_;
  Telemetry telemetry_;
  std::optional<std::filesystem::path> overrides_path_;
  std::unique_ptr<ListUpdater> updater_;
  std::unique_ptr<FilteringProxy> proxy_;
  std::unique_ptr<ControlApi> control_;
};

// Reads a snapshot file from disk. Throws CorruptSnapshot.
PrefixStore load_snapshot(const std::filesystem::path& path);
// Atomic write via a temporary file in the same directory.
void save_snapshot(const PrefixStore& store, const std::filesystem::path& path);

}  // namespace trackguard
