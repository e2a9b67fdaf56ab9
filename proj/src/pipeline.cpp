// SPDX-License-Identifier: Apache-2.0
#include "clqa/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

#include "clqa/jsonl.hpp"

namespace clqa {

RefreshSchedule plan_refresh(std::size_t total_steps, std::size_t interval) {
  if (total_steps == 0 || interval == 0) {
    throw std::invalid_argument("plan_refresh: steps and interval must be positive");
  }
  RefreshSchedule schedule;
  schedule.total_steps = total_steps;
  schedule.interval = interval;
  for (std::size_t step = interval; step <= total_steps; step += interval) {
    schedule.refresh_steps.push_back(step);
  }
  return schedule;
}

RefreshResult run_refresh_cycle(const TrainingSetState& state,
                                const RetrieveFn& retrieve, std::size_t k) {
  if (k == 0) {
    throw std::invalid_argument("run_refresh_cycle: k must be at least 1");
  }
  TrainingSetState next;
  next.generation = state.generation + 1;
  for (const auto& [query_id, previous] : state.retrieved) {
    ScoreList ranked;
    try {
      ranked = retrieve(query_id);
    } catch (const std::exception& e) {
      return {state, "retrieval failed for query " + query_id + ": " + e.what()};
    }
    std::vector<std::size_t> order(ranked.ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double sa = ranked.scores[static_cast<Eigen::Index>(a)];
      const double sb = ranked.scores[static_cast<Eigen::Index>(b)];
      if (sa != sb) return sa > sb;
      return ranked.ids[a] < ranked.ids[b];
    });
    std::vector<std::string> ids;
    ids.reserve(std::min(k, order.size()));
    for (std::size_t i = 0; i < order.size() && i < k; ++i) {
      ids.push_back(ranked.ids[order[i]]);
    }
    next.retrieved[query_id] = std::move(ids);
  }
  return {std::move(next), std::nullopt};
}

std::string serialize_state(const TrainingSetState& state) {
  std::string out;
  out += nlohmann::json{{"generation", state.generation}}.dump();
  out += '\n';
  for (const auto& [query_id, passages] : state.retrieved) {
    out += nlohmann::json{{"query", query_id}, {"passages", passages}}.dump();
    out += '\n';
  }
  return out;
}

void save_state(const TrainingSetState& state,
                const std::filesystem::path& path) {
  write_file_atomic(path, serialize_state(state));
}

TrainingSetState load_state(const std::filesystem::path& path) {
  TrainingSetState state;
  bool have_header = false;
  read_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
    if (j.contains("generation")) {
      state.generation = j.at("generation").get<std::size_t>();
      have_header = true;
      return;
    }
    const auto query = j.at("query").get<std::string>();
    if (!state.retrieved
             .emplace(query, j.at("passages").get<std::vector<std::string>>())
             .second) {
      throw std::invalid_argument("duplicate query in state: " + query);
    }
  });
  if (!have_header) {
    throw std::runtime_error("state file missing generation header: " +
                             path.string());
  }
  return state;
}

}  // namespace clqa
