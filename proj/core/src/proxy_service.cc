#include "trackguard/proxy_service.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "trackguard/errors.h"

namespace trackguard {

PrefixStore load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptSnapshot("cannot read snapshot " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return deserialize(buffer.str());
  } catch (const CorruptSnapshot& e) {
    throw CorruptSnapshot(path.string() + ": " + e.what());
  }
}

void save_snapshot(const PrefixStore& store, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << serialize(store);
    if (!out.flush()) throw Error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ProxyService::ProxyService(ServiceConfig config) : config_(std::move(config)) {
  config_.proxy.validate();
  if (config_.snapshot) store_.replace(load_snapshot(*config_.snapshot));

  if (config_.overrides_file) {
    overrides_path_ = config_.overrides_file;
  } else if (config_.snapshot) {
    overrides_path_ = config_.snapshot->parent_path() / "overrides.json";
  }
  if (overrides_path_) overrides_ = OverrideSet::load(*overrides_path_);

  UpstreamResolver resolver;
  if (config_.hosts_file) resolver.load_file(*config_.hosts_file);

  if (config_.update_url) {
    UpdaterState state;
    state.endpoint = *config_.update_url;
    state.interval = config_.update_interval;
    updater_ = std::make_unique<ListUpdater>(state, store_,
                                             make_http_transport(*config_.update_url));
  }
  proxy_ = std::make_unique<FilteringProxy>(config_.proxy, store_, overrides_, telemetry_,
                                            std::move(resolver));
  if (config_.control) {
    ControlContext ctx;
    ctx.store = &store_;
    ctx.overrides = &overrides_;
    ctx.telemetry = &telemetry_;
    ctx.updater = updater_.get();
    ctx.overrides_file = overrides_path_.value_or("");
    ctx.config_json = config_echo();
    control_ = std::make_unique<ControlApi>(std::move(ctx));
  }
}

ProxyService::~ProxyService() { stop(); }

void ProxyService::start() {
  proxy_->start();
  if (control_) control_->start(*config_.control);
  if (updater_) updater_->start();
}

void ProxyService::stop() {
  if (updater_) updater_->stop();
  if (control_) control_->stop();
  if (proxy_) proxy_->stop();
}

std::string ProxyService::config_echo() const {
  nlohmann::json out = {
      {"listen", config_.proxy.listen.to_string()},
      {"third_party_only", config_.proxy.third_party_only},
      {"block_status", config_.proxy.block_status},
      {"snapshot", config_.snapshot ? nlohmann::json(config_.snapshot->string()) : nullptr},
      {"update_url", config_.update_url ? nlohmann::json(*config_.update_url) : nullptr},
      {"update_interval_ms", config_.update_interval.count()},
      {"control", config_.control ? nlohmann::json(config_.control->to_string()) : nullptr},
      {"overrides_file",
       overrides_path_ ? nlohmann::json(overrides_path_->string()) : nullptr},
  };
  return out.dump();
}

}  // namespace trackguard
