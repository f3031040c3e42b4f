#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "trackguard/blocklist_store.h"
#include "trackguard/list_update.h"

namespace trackguard {

inline constexpr std::chrono::milliseconds kDefaultUpdateInterval =
    std::chrono::minutes(45);

struct UpdaterState {
  std::string endpoint;
  uint64_t current_version = 0;
  std::chrono::milliseconds interval = kDefaultUpdateInterval;
  std::optional<std::chrono::system_clock::time_point> last_success;
  unsigned consecutive_failures = 0;
};

// One answer from the update server.
struct UpdateResponse {
  enum class Kind { kUpdate, kUnchanged, kFailure };
  Kind kind = Kind::kFailure;
  ListUpdate update;
  std::string error;
};

// Fetches the update for a client at `version` (0 requests a snapshot).
using UpdateTransport = std::function<UpdateResponse(uint64_t version)>;

// GET <endpoint>?version=N. 200 carries a ListUpdate, 304 means unchanged,
// anything else is a failure. Only http:// endpoints are supported.
UpdateTransport make_http_transport(
    const std::string& endpoint,
    std::chrono::milliseconds timeout = std::chrono::seconds(10));

enum class CycleOutcome { kUpdated, kUnchanged, kFailed };

// Periodic list refresh. On failure the live store is kept (stale but
// usable) and the next attempt backs off exponentially, capped at
// 8 x interval.
class ListUpdater {
 public:
  ListUpdater(UpdaterState state, StoreHandle& store, UpdateTransport transport);
  ~ListUpdater();

  ListUpdater(const ListUpdater&) = delete;
  ListUpdater& operator=(const ListUpdater&) = delete;

  // One request cycle, including the snapshot retry after VersionMismatch.
  CycleOutcome run_once();

  // Delay before the next cycle given the current failure streak.
  std::chrono::milliseconds next_delay() const;
  static std::chrono::milliseconds backoff_delay(
      std::chrono::milliseconds interval, unsigned consecutive_failures);

  // Background loop. The first cycle runs immediately when the store is
  // still empty (version 0), otherwise after one interval.
  void start();
  void stop();
  // Wakes the loop for an immediate cycle.
  void trigger();

  UpdaterState state() const;

 private:
  void loop();
  void record_failure();
  void record_success();

  StoreHandle& store_;
  UpdateTransport transport_;

  mutable std::mutex mu_;
  std::condition_variable wake_;
  UpdaterState state_;
  bool stopping_ = false;
  bool triggered_ = false;
  std::mutex cycle_mu_;
  std::thread thread_;
};

}  // namespace trackguard
