#include "trackguard/control_api.h"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "trackguard/errors.h"

namespace trackguard {
namespace {

using nlohmann::json;

std::string iso8601(std::chrono::system_clock::time_point tp) {
  std::time_t seconds = std::chrono::system_clock::to_time_t(tp);
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

}  // namespace

struct ControlApi::Impl {
  ControlContext ctx;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  httplib::Server server;
  std::thread thread;
  net::HostPort bound;

  void mutate_override(const httplib::Request& req, httplib::Response& res, bool set) {
    std::string site = req.path_params.at("site");
    try {
      bool changed = set ? ctx.overrides->set(site) : ctx.overrides->clear(site);
      if (changed && !ctx.overrides_file.empty()) ctx.overrides->save(ctx.overrides_file);
      res.status = 204;
    } catch (const InvalidDomain& e) {
      send_error(res, 400, e.what());
    } catch (const Error& e) {
      send_error(res, 500, e.what());
    }
  }
};

ControlApi::ControlApi(ControlContext context) : impl_(std::make_unique<Impl>()) {
  if (!context.store || !context.overrides || !context.telemetry) {
    throw std::invalid_argument("control API needs store, overrides and telemetry");
  }
  impl_->ctx = std::move(context);
  Impl* impl = impl_.get();
  auto& server = impl->server;

  server.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(status_json(), "application/json");
  });
  server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(stats_json(), "application/json");
  });
  server.Get("/overrides", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(overrides_json(), "application/json");
  });
  server.Put("/override/:site", [impl](const httplib::Request& req, httplib::Response& res) {
    impl->mutate_override(req, res, true);
  });
  server.Delete("/override/:site",
                [impl](const httplib::Request& req, httplib::Response& res) {
                  impl->mutate_override(req, res, false);
                });
  server.Post("/list/reload", [impl](const httplib::Request&, httplib::Response& res) {
    if (!impl->ctx.updater) {
      send_error(res, 503, "no update endpoint configured");
      return;
    }
    impl->ctx.updater->trigger();
    res.status = 202;
    res.set_content(json{{"status", "reload scheduled"}}.dump(), "application/json");
  });
}

ControlApi::~ControlApi() { stop(); }

void ControlApi::start(const net::HostPort& listen) {
  auto& server = impl_->server;
  int port = listen.port;
  if (port == 0) {
    port = server.bind_to_any_port(listen.host);
    if (port < 0) throw NetworkError("cannot bind control API on " + listen.host);
  } else if (!server.bind_to_port(listen.host, port)) {
    throw NetworkError("cannot bind control API on " + listen.to_string());
  }
  impl_->bound = {listen.host, static_cast<uint16_t>(port)};
  impl_->thread = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
}

void ControlApi::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->server.stop();
  impl_->thread.join();
}

net::HostPort ControlApi::address() const { return impl_->bound; }

std::string ControlApi::status_json() const {
  const auto& ctx = impl_->ctx;
  auto store = ctx.store->current();
  json updater = nullptr;
  if (ctx.updater) {
    UpdaterState state = ctx.updater->state();
    updater = {
        {"endpoint", state.endpoint},
        {"current_version", state.current_version},
        {"interval_ms", state.interval.count()},
        {"last_success", state.last_success ? json(iso8601(*state.last_success)) : json(nullptr)},
        {"consecutive_failures", state.consecutive_failures},
    };
  } else {
    updater = {{"last_success", nullptr}, {"consecutive_failures", 0}};
  }
  auto uptime = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - impl_->started);
  json config = json::parse(ctx.config_json, nullptr, false);
  if (config.is_discarded()) config = json::object();
  json out = {
      {"store_version", store->version()},
      {"expression_count", store->expression_count()},
      {"updater", updater},
      {"uptime_seconds", static_cast<double>(uptime.count()) / 1000.0},
      {"config", config},
  };
  return out.dump();
}

std::string ControlApi::stats_json() const {
  return encode_telemetry(impl_->ctx.telemetry->snapshot_counters());
}

std::string ControlApi::overrides_json() const {
  return json(impl_->ctx.overrides->sites()).dump();
}

}  // namespace trackguard
