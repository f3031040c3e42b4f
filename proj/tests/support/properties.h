#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace trackguard::testing {

// Randomized property runs shared by the unit suites (small counts) and the
// acceptance binary (full counts). Each returns the number of cases checked
// and the violations found; `first_failure` describes one counterexample.
struct PropertyResult {
  std::size_t cases = 0;
  std::size_t violations = 0;
  // Checks whose outcome was non-trivial (a hit, a block, a recovery).
  std::size_t interesting = 0;
  std::string first_failure;

  void fail(std::string what);
};

// Store lookup vs brute-force suffix matching over random domain sets of at
// most `max_domains` entries.
PropertyResult oracle_equivalence(uint64_t seed, std::size_t trials,
                                  std::size_t max_domains = 200,
                                  std::size_t queries_per_trial = 50);

// Snapshot plus up to `max_diffs` diffs, applied both directly and through a
// ListUpdater fed by a server that sometimes sends diffs on a wrong base,
// compared with a direct build of the final list. `interesting` counts
// VersionMismatch recoveries.
PropertyResult update_convergence(uint64_t seed, std::size_t trials,
                                  std::size_t max_diffs = 20);

// classify() on navigations is always allow.
PropertyResult navigation_exemption(uint64_t seed, std::size_t cases);
// Overriding site S never changes a decision whose first party is not S.
PropertyResult override_soundness(uint64_t seed, std::size_t cases);
// Growing the list never turns a block into an allow.
PropertyResult monotonicity(uint64_t seed, std::size_t cases);
// Concurrent record_page_load calls: buckets sum to the number of calls and
// match a reference bucket count.
PropertyResult counter_conservation(uint64_t seed, std::size_t cases);
// classify() agrees with a reference implementation of the rule order.
PropertyResult rule_order(uint64_t seed, std::size_t cases);

}  // namespace trackguard::testing
