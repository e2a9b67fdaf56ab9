// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <vector>

#include "clqa/types.hpp"

namespace clqa {

struct LoadOptions {
  // Token caps applied on load with truncation; 0 disables a cap.
  std::size_t passage_token_cap = 200;
  std::size_t query_token_cap = 50;
};

// Line-delimited JSON, one passage per line with fields id, lang, title,
// text and optional token_count. A declared token_count must match the
// tokenizer's count for the record's text.
Corpus load_corpus(const std::filesystem::path& path,
                   const LoadOptions& options = {});

// Same format plus an optional answers object (lang -> [strings]).
std::vector<Query> load_queries(const std::filesystem::path& path,
                                const LoadOptions& options = {});

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
void save_queries(const std::vector<Query>& queries,
                  const std::filesystem::path& path);

}  // namespace clqa
