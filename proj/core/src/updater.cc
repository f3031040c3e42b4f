#include "trackguard/updater.h"

#include <algorithm>

#include <httplib.h>

#include "trackguard/errors.h"
#include "trackguard/url.h"

namespace trackguard {

UpdateTransport make_http_transport(const std::string& endpoint,
                                    std::chrono::milliseconds timeout) {
  CanonicalUrl url = parse_and_canonicalize(endpoint);
  if (url.scheme != "http") {
    throw InvalidUpdate("update endpoint must be http://: " + endpoint);
  }
  std::string origin = "http://" + url.host + ":" +
                       std::to_string(url.effective_port());
  std::string rendered = render(url);
  std::string base_target = rendered.substr(rendered.find('/', url.scheme.size() + 3));
  base_target += url.query ? "&" : "?";

  return [origin, base_target, timeout](uint64_t version) {
    UpdateResponse response;
    httplib::Client client(origin);
    auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
        timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    auto result =
        client.Get(base_target + "version=" + std::to_string(version));
    if (!result) {
      response.error = httplib::to_string(result.error());
      return response;
    }
    if (result->status == 304) {
      response.kind = UpdateResponse::Kind::kUnchanged;
      return response;
    }
    if (result->status != 200) {
      response.error = "HTTP " + std::to_string(result->status);
      return response;
    }
    try {
      response.update = decode_update(result->body);
      response.kind = UpdateResponse::Kind::kUpdate;
    } catch (const Error& e) {
      response.error = e.what();
    }
    return response;
  };
}

ListUpdater::ListUpdater(UpdaterState state, StoreHandle& store,
                         UpdateTransport transport)
    : store_(store), transport_(std::move(transport)), state_(std::move(state)) {
  if (state_.interval <= std::chrono::milliseconds::zero()) {
    throw std::invalid_argument("update interval must be positive");
  }
  state_.current_version = store_.current()->version();
}

ListUpdater::~ListUpdater() { stop(); }

std::chrono::milliseconds ListUpdater::backoff_delay(
    std::chrono::milliseconds interval, unsigned consecutive_failures) {
  std::chrono::milliseconds cap = interval * 8;
  std::chrono::milliseconds delay = interval;
  for (unsigned i = 0; i < consecutive_failures && delay < cap; ++i) delay *= 2;
  return std::min(delay, cap);
}

std::chrono::milliseconds ListUpdater::next_delay() const {
  std::lock_guard lock(mu_);
  return backoff_delay(state_.interval, state_.consecutive_failures);
}

void ListUpdater::record_failure() {
  std::lock_guard lock(mu_);
  ++state_.consecutive_failures;
}

void ListUpdater::record_success() {
  std::lock_guard lock(mu_);
  state_.consecutive_failures = 0;
  state_.last_success = std::chrono::system_clock::now();
  state_.current_version = store_.current()->version();
}

CycleOutcome ListUpdater::run_once() {
  std::lock_guard cycle(cycle_mu_);
  auto live = store_.current();
  UpdateResponse response = transport_(live->version());
  if (response.kind == UpdateResponse::Kind::kFailure) {
    record_failure();
    return CycleOutcome::kFailed;
  }
  if (response.kind == UpdateResponse::Kind::kUnchanged) {
    record_success();
    return CycleOutcome::kUnchanged;
  }

  try {
    PrefixStore next;
    try {
      next = apply_update(*live, response.update);
    } catch (const VersionMismatch&) {
      UpdateResponse snapshot = transport_(0);
      if (snapshot.kind != UpdateResponse::Kind::kUpdate) {
        record_failure();
        return CycleOutcome::kFailed;
      }
      next = apply_update(*live, snapshot.update);
    }
    store_.replace(std::move(next));
  } catch (const Error&) {
    record_failure();
    return CycleOutcome::kFailed;
  }
  record_success();
  return CycleOutcome::kUpdated;
}

void ListUpdater::start() {
  std::lock_guard lock(mu_);
  if (thread_.joinable()) return;
  stopping_ = false;
  triggered_ = store_.current()->version() == 0;
  thread_ = std::thread([this] { loop(); });
}

void ListUpdater::stop() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void ListUpdater::trigger() {
  {
    std::lock_guard lock(mu_);
    triggered_ = true;
  }
  wake_.notify_all();
}

UpdaterState ListUpdater::state() const {
  std::lock_guard lock(mu_);
  return state_;
}

void ListUpdater::loop() {
  for (;;) {
    {
      std::unique_lock lock(mu_);
      auto delay = backoff_delay(state_.interval, state_.consecutive_failures);
      wake_.wait_for(lock, delay, [this] { return stopping_ || triggered_; });
      if (stopping_) return;
      triggered_ = false;
    }
    run_once();
  }
}

}  // namespace trackguard
