// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "clqa/index.hpp"
#include "clqa/types.hpp"

#include "json.hpp"

namespace clqa {

struct RetrievalJudgment {
  std::string query_id;
  bool hit = false;
  std::size_t budget_tokens = 0;
  std::optional<std::string> matched_answer_lang;
};

// A query is a hit when any gold answer occurs as a substring of the
// concatenated included-token prefixes (NFKC + lowercase matching).
std::vector<RetrievalJudgment> judge_token_slices(
    const std::vector<Query>& queries,
    const std::map<std::string, TokenSlice>& slices, const Corpus& corpus,
    std::size_t budget_tokens);

// Fraction of hits per query language.
std::map<std::string, double> recall_at_tokens(
    const std::vector<Query>& queries,
    const std::map<std::string, TokenSlice>& slices, const Corpus& corpus,
    std::size_t budget_tokens);

struct RecallByLanguage {
  std::map<std::string, double> target;  // answer in the query's language
  std::map<std::string, double> any;     // answer in any language
};

// Hit when an answer string appears in any of the top-n passages' text,
// split by whether the answer is in the query's own language.
RecallByLanguage recall_at_passages_by_language(
    const std::vector<Query>& queries,
    const std::map<std::string, ScoreList>& ranked, const Corpus& corpus,
    std::size_t top_n);

struct QaScores {
  double f1 = 0.0;
  double em = 0.0;
  double bleu = 0.0;
};

QaScores score_prediction(const std::string& prediction,
                          const std::vector<std::string>& golds);

// Per-language means; queries without a prediction score as empty strings.
std::map<std::string, QaScores> qa_metrics(
    const std::map<std::string, std::string>& predictions,
    const std::vector<Query>& queries);

double macro_average(const std::map<std::string, double>& per_language);

// Per-language values plus the unweighted macro average for each metric.
class MetricReport {
 public:
  void set(const std::string& metric, const std::string& lang, double value);
  nlohmann::json to_json() const;
  std::string to_table() const;

 private:
  std::map<std::string, std::map<std::string, double>> values_;
};

}  // namespace clqa
