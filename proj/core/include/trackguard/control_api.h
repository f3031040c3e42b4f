#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "trackguard/blocklist_store.h"
#include "trackguard/net.h"
#include "trackguard/policy.h"
#include "trackguard/updater.h"

namespace trackguard {

// Live state the control endpoints read and mutate. Pointers are borrowed
// and must outlive the ControlApi.
struct ControlContext {
  const StoreHandle* store = nullptr;
  OverrideSet* overrides = nullptr;
  const Telemetry* telemetry = nullptr;
  ListUpdater* updater = nullptr;  // null when no update endpoint
  // Where overrides are persisted after each change; empty disables saving.
  std::filesystem::path overrides_file;
  // Echoed verbatim under "config" in /status. Must be a JSON object.
  std::string config_json = "{}";
};

// Routes:
//   GET    /status
//   GET    /stats
//   GET    /overrides
//   PUT    /override/{site}
//   DELETE /override/{site}
//   POST   /list/reload
class ControlApi {
 public:
  explicit ControlApi(ControlContext context);
  ~ControlApi();

  ControlApi(const ControlApi&) = delete;
  ControlApi& operator=(const ControlApi&) = delete;

  // Port 0 picks an ephemeral port. Throws NetworkError when the address
  // cannot be bound.
  void start(const net::HostPort& listen);
  void stop();
  net::HostPort address() const;

  // Response bodies, also used by tests without a socket.
  std::string status_json() const;
  std::string stats_json() const;
  std::string overrides_json() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace trackguard
