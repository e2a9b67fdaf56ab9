// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clqa/scoring.hpp"

namespace clqa {

struct RefreshSchedule {
  std::size_t total_steps = 0;
  std::size_t interval = 0;
  std::vector<std::size_t> refresh_steps;  // interval, 2*interval, ...
};

// refresh_steps = {interval, 2*interval, ...} within [1, total_steps].
RefreshSchedule plan_refresh(std::size_t total_steps, std::size_t interval);

// Per-query retrieved passage lists plus the number of refreshes applied.
struct TrainingSetState {
  std::map<std::string, std::vector<std::string>> retrieved;
  std::size_t generation = 0;

  bool operator==(const TrainingSetState&) const = default;
};

using RetrieveFn = std::function<ScoreList(const std::string& query_id)>;

struct RefreshResult {
  TrainingSetState state;
  std::optional<std::string> error;  // set when the cycle was aborted
};

// Replaces every query's list with the top-k ids from `retrieve` and bumps
// the generation. Atomic: any retrieval failure returns the input state
// unchanged with an error naming the query.
RefreshResult run_refresh_cycle(const TrainingSetState& state,
                                const RetrieveFn& retrieve, std::size_t k);

// JSONL checkpoint: a {"generation": g} header line followed by one
// {"query", "passages"} record per query.
void save_state(const TrainingSetState& state,
                const std::filesystem::path& path);
TrainingSetState load_state(const std::filesystem::path& path);
std::string serialize_state(const TrainingSetState& state);

}  // namespace clqa
