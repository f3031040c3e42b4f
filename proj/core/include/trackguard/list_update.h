#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace trackguard {

// A versioned list delta. from_version == 0 marks a full snapshot whose add
// set replaces the store contents.
//
// Wire form: {"from_version":N,"to_version":M,"add":[...],"remove":[...]}.
// The on-disk snapshot form adds {"format":"tp-snapshot","v":1}.
struct ListUpdate {
  uint64_t from_version = 0;
  uint64_t to_version = 1;
  std::vector<std::string> add;
  std::vector<std::string> remove;

  bool is_snapshot() const { return from_version == 0; }

  friend bool operator==(const ListUpdate&, const ListUpdate&) = default;
};

inline constexpr std::string_view kSnapshotFormatName = "tp-snapshot";
inline constexpr int kSnapshotFormatVersion = 1;

// Checks to_version > from_version and add/remove disjointness.
// Throws InvalidUpdate.
void validate(const ListUpdate& update);

// Wire encoding; keys sorted, arrays in the given order.
std::string encode_update(const ListUpdate& update);
// Throws InvalidUpdate on malformed JSON or missing fields. The snapshot
// header fields are accepted and ignored.
ListUpdate decode_update(std::string_view text);

// On-disk snapshot: sorted, deduplicated add set plus the format header.
std::string encode_snapshot_file(const ListUpdate& snapshot);
// Throws CorruptSnapshot for anything that is not a well-formed snapshot.
ListUpdate decode_snapshot_file(std::string_view bytes);

}  // namespace trackguard
