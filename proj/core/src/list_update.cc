#include "trackguard/list_update.h"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "trackguard/errors.h"

namespace trackguard {
namespace {

using nlohmann::json;

std::vector<std::string> string_array(const json& doc, const char* key) {
  const json& node = doc.at(key);
  if (!node.is_array()) throw InvalidUpdate(std::string(key) + " is not an array");
  std::vector<std::string> out;
  out.reserve(node.size());
  for (const auto& item : node) {
    if (!item.is_string()) {
      throw InvalidUpdate(std::string(key) + " contains a non-string");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

uint64_t version_field(const json& doc, const char* key) {
  const json& node = doc.at(key);
  if (!node.is_number_unsigned() && !(node.is_number_integer() && node.get<int64_t>() >= 0)) {
    throw InvalidUpdate(std::string(key) + " is not a non-negative integer");
  }
  return node.get<uint64_t>();
}

json to_json(const ListUpdate& update) {
  return json{{"from_version", update.from_version},
              {"to_version", update.to_version},
              {"add", update.add},
              {"remove", update.remove}};
}

ListUpdate from_json(const json& doc) {
  if (!doc.is_object()) throw InvalidUpdate("update is not a JSON object");
  ListUpdate update;
  try {
    update.from_version = version_field(doc, "from_version");
    update.to_version = version_field(doc, "to_version");
    update.add = string_array(doc, "add");
    update.remove = doc.contains("remove") ? string_array(doc, "remove")
                                           : std::vector<std::string>{};
  } catch (const json::exception& e) {
    throw InvalidUpdate(e.what());
  }
  return update;
}

}  // namespace

void validate(const ListUpdate& update) {
  if (update.to_version <= update.from_version) {
    throw InvalidUpdate("to_version must exceed from_version");
  }
  std::set<std::string_view> added(update.add.begin(), update.add.end());
  for (const auto& entry : update.remove) {
    if (added.count(entry)) {
      throw InvalidUpdate("expression both added and removed: " + entry);
    }
  }
}

std::string encode_update(const ListUpdate& update) {
  return to_json(update).dump();
}

ListUpdate decode_update(std::string_view text) {
  json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw InvalidUpdate("update is not valid JSON");
  return from_json(doc);
}

std::string encode_snapshot_file(const ListUpdate& snapshot) {
  ListUpdate normalized = snapshot;
  std::sort(normalized.add.begin(), normalized.add.end());
  normalized.add.erase(std::unique(normalized.add.begin(), normalized.add.end()),
                       normalized.add.end());
  normalized.remove.clear();
  json doc = to_json(normalized);
  doc["format"] = kSnapshotFormatName;
  doc["v"] = kSnapshotFormatVersion;
  return doc.dump(2) + "\n";
}

ListUpdate decode_snapshot_file(std::string_view bytes) {
  json doc = json::parse(bytes, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw CorruptSnapshot("snapshot is not a JSON object");
  }
  auto format = doc.find("format");
  auto version = doc.find("v");
  if (format == doc.end() || *format != kSnapshotFormatName) {
    throw CorruptSnapshot("missing or unknown snapshot format");
  }
  if (version == doc.end() || *version != kSnapshotFormatVersion) {
    throw CorruptSnapshot("unsupported snapshot format version");
  }
  ListUpdate update;
  try {
    update = from_json(doc);
  } catch (const InvalidUpdate& e) {
    throw CorruptSnapshot(e.what());
  }
  if (update.from_version != 0) throw CorruptSnapshot("snapshot is a diff");
  if (!update.remove.empty()) throw CorruptSnapshot("snapshot removes entries");
  return update;
}

}  // namespace trackguard
