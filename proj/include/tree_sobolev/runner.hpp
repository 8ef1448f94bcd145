#pragma once

#include <cstdint>
#include <string>

#include "tree_sobolev/common.hpp"
#include "tree_sobolev/config.hpp"
#include "tree_sobolev/walk.hpp"

namespace tsob {

// Exit codes of run(): 0 ok, 1 verify found a violation, 2 bad input
// (including size caps and I/O), 3 numerical non-convergence.
int exit_code_for(ErrorCode code) noexcept;

struct RunResult {
  int exit_code = 0;
  // Report text on success or a verify failure; diagnostic JSON otherwise.
  std::string output;
};

// Dispatches config.command. When config.output is set the report is also
// written there. Never throws.
RunResult run(const RunConfig& config);
RunResult run_config_text(const std::string& config_json);

// 0 when every entry of a verify report's "checks" passed, 1 otherwise
// (2 if the text is not a verify report).
int verify_exit_code(const std::string& report_json);

// Monte-Carlo walks split into fixed shards seeded from (seed, start_depth,
// shard) and merged in shard order, so the counts do not depend on the
// number of worker threads.
inline constexpr int simulate_shards = 64;
WalkStats simulate_sharded(const WalkProfile& profile, int start_depth, std::uint64_t trials,
                           std::uint64_t seed);

// Worker threads for shards and grid cells: TREE_SOBOLEV_THREADS if set,
// else the hardware concurrency capped at 16.
unsigned worker_threads();

}  // namespace tsob
