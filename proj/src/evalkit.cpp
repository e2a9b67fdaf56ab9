// SPDX-License-Identifier: Apache-2.0
#include "clqa/evalkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "clqa/text_normalize.hpp"
#include "clqa/tokenize.hpp"

namespace clqa {
namespace {

// First language whose normalized answers contain a match, preferring the
// query's own language.
std::optional<std::string> matched_language(const Query& query,
                                            const std::string& haystack) {
  std::vector<std::string> langs;
  if (query.answers.count(query.lang)) langs.push_back(query.lang);
  for (const auto& [lang, answers] : query.answers) {
    if (lang != query.lang) langs.push_back(lang);
  }
  for (const std::string& lang : langs) {
    for (const std::string& answer : query.answers.at(lang)) {
      const std::string needle = normalize_for_match(answer);
      if (!needle.empty() && haystack.find(needle) != std::string::npos) {
        return lang;
      }
    }
  }
  return std::nullopt;
}

std::unordered_map<std::string, std::size_t> token_counts(
    const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& t : tokens) counts[t] += 1;
  return counts;
}

double token_f1(const std::vector<std::string>& pred,
                const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  const auto pred_counts = token_counts(pred);
  const auto gold_counts = token_counts(gold);
  std::size_t overlap = 0;
  for (const auto& [token, count] : pred_counts) {
    const auto it = gold_counts.find(token);
    if (it != gold_counts.end()) overlap += std::min(count, it->second);
  }
  if (overlap == 0) return 0.0;
  const double precision =
      static_cast<double>(overlap) / static_cast<double>(pred.size());
  const double recall =
      static_cast<double>(overlap) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(
    const std::vector<std::string>& tokens, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)] +=
        1;
  }
  return counts;
}

// Sentence BLEU: uniform 4-gram weights, add-one smoothing on the n > 1
// precisions, brevity penalty against the reference length.
double sentence_bleu(const std::vector<std::string>& pred,
                     const std::vector<std::string>& gold) {
  if (pred.empty()) return gold.empty() ? 1.0 : 0.0;
  if (gold.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto pred_ngrams = ngram_counts(pred, n);
    const auto gold_ngrams = ngram_counts(gold, n);
    std::size_t matches = 0;
    std::size_t total = 0;
    for (const auto& [ngram, count] : pred_ngrams) {
      total += count;
      const auto it = gold_ngrams.find(ngram);
      if (it != gold_ngrams.end()) matches += std::min(count, it->second);
    }
    double precision;
    if (n == 1) {
      if (matches == 0) return 0.0;
      precision = static_cast<double>(matches) / static_cast<double>(total);
    } else {
      precision = (static_cast<double>(matches) + 1.0) /
                  (static_cast<double>(total) + 1.0);
    }
    log_sum += 0.25 * std::log(precision);
  }
  double brevity = 1.0;
  if (pred.size() < gold.size()) {
    brevity = std::exp(1.0 - static_cast<double>(gold.size()) /
                                 static_cast<double>(pred.size()));
  }
  return brevity * std::exp(log_sum);
}

}  // namespace

std::vector<RetrievalJudgment> judge_token_slices(
    const std::vector<Query>& queries,
    const std::map<std::string, TokenSlice>& slices, const Corpus& corpus,
    std::size_t budget_tokens) {
  std::vector<RetrievalJudgment> judgments;
  judgments.reserve(queries.size());
  for (const Query& query : queries) {
    const auto it = slices.find(query.id);
    if (it == slices.end()) {
      throw std::invalid_argument("missing slice for query: " + query.id);
    }
    const TokenSlice& slice = it->second;
    if (slice.total_tokens > budget_tokens) {
      throw std::invalid_argument("slice exceeds budget for query: " + query.id);
    }
    std::string text;
    for (const TokenSliceEntry& entry : slice.entries) {
      const Passage& p = corpus.at(entry.id);
      if (entry.tokens > p.token_count) {
        throw std::invalid_argument("slice overruns passage " + entry.id);
      }
      if (!text.empty()) text += '\n';
      text += token_prefix(p.text, entry.tokens);
    }
    RetrievalJudgment judgment;
    judgment.query_id = query.id;
    judgment.budget_tokens = budget_tokens;
    judgment.matched_answer_lang =
        matched_language(query, normalize_for_match(text));
    judgment.hit = judgment.matched_answer_lang.has_value();
    judgments.push_back(std::move(judgment));
  }
  return judgments;
}

std::map<std::string, double> recall_at_tokens(
    const std::vector<Query>& queries,
    const std::map<std::string, TokenSlice>& slices, const Corpus& corpus,
    std::size_t budget_tokens) {
  const std::vector<RetrievalJudgment> judgments =
      judge_token_slices(queries, slices, corpus, budget_tokens);
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto& [hits, count] = tally[queries[i].lang];
    count += 1;
    if (judgments[i].hit) hits += 1;
  }
  std::map<std::string, double> recall;
  for (const auto& [lang, hc] : tally) {
    recall[lang] =
        static_cast<double>(hc.first) / static_cast<double>(hc.second);
  }
  return recall;
}

RecallByLanguage recall_at_passages_by_language(
    const std::vector<Query>& queries,
    const std::map<std::string, ScoreList>& ranked, const Corpus& corpus,
    std::size_t top_n) {
  if (top_n == 0) {
    throw std::invalid_argument("recall_at_passages_by_language: n must be >= 1");
  }
  std::map<std::string, std::array<std::size_t, 3>> tally;  // target, any, count
  for (const Query& query : queries) {
    const auto it = ranked.find(query.id);
    if (it == ranked.end()) {
      throw std::invalid_argument("missing ranking for query: " + query.id);
    }
    std::string text;
    const std::size_t n = std::min(top_n, it->second.ids.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!text.empty()) text += '\n';
      text += corpus.at(it->second.ids[i]).text;
    }
    const std::string haystack = normalize_for_match(text);
    const auto contains_any = [&](const std::vector<std::string>& answers) {
      for (const std::string& answer : answers) {
        const std::string needle = normalize_for_match(answer);
        if (!needle.empty() && haystack.find(needle) != std::string::npos) {
          return true;
        }
      }
      return false;
    };
    bool target_hit = false;
    bool any_hit = false;
    for (const auto& [lang, answers] : query.answers) {
      if (contains_any(answers)) {
        any_hit = true;
        if (lang == query.lang) target_hit = true;
      }
    }
    auto& counts = tally[query.lang];
    counts[0] += target_hit ? 1 : 0;
    counts[1] += any_hit ? 1 : 0;
    counts[2] += 1;
  }
  RecallByLanguage recall;
  for (const auto& [lang, counts] : tally) {
    recall.target[lang] =
        static_cast<double>(counts[0]) / static_cast<double>(counts[2]);
    recall.any[lang] =
        static_cast<double>(counts[1]) / static_cast<double>(counts[2]);
  }
  return recall;
}

QaScores score_prediction(const std::string& prediction,
                          const std::vector<std::string>& golds) {
  QaScores best;
  const std::string pred_norm = normalize_answer(prediction);
  const std::vector<std::string> pred_tokens = tokenize(pred_norm);
  for (const std::string& gold : golds) {
    const std::string gold_norm = normalize_answer(gold);
    const std::vector<std::string> gold_tokens = tokenize(gold_norm);
    best.f1 = std::max(best.f1, token_f1(pred_tokens, gold_tokens));
    best.em = std::max(best.em, pred_norm == gold_norm ? 1.0 : 0.0);
    best.bleu = std::max(best.bleu, sentence_bleu(pred_tokens, gold_tokens));
  }
  return best;
}

std::map<std::string, QaScores> qa_metrics(
    const std::map<std::string, std::string>& predictions,
    const std::vector<Query>& queries) {
  std::set<std::string> known;
  for (const Query& q : queries) known.insert(q.id);
  for (const auto& [id, text] : predictions) {
    if (!known.count(id)) {
      throw std::invalid_argument("prediction for unknown query id: " + id);
    }
  }
  std::map<std::string, std::vector<QaScores>> by_lang;
  for (const Query& query : queries) {
    std::vector<std::string> golds;
    for (const auto& [lang, answers] : query.answers) {
      golds.insert(golds.end(), answers.begin(), answers.end());
    }
    const auto it = predictions.find(query.id);
    const std::string prediction = it == predictions.end() ? "" : it->second;
    QaScores scores;
    if (!golds.empty()) {
      scores = score_prediction(prediction, golds);
    }
    by_lang[query.lang].push_back(scores);
  }
  std::map<std::string, QaScores> result;
  for (const auto& [lang, list] : by_lang) {
    QaScores mean;
    for (const QaScores& s : list) {
      mean.f1 += s.f1;
      mean.em += s.em;
      mean.bleu += s.bleu;
    }
    const double n = static_cast<double>(list.size());
    result[lang] = {mean.f1 / n, mean.em / n, mean.bleu / n};
  }
  return result;
}

double macro_average(const std::map<std::string, double>& per_language) {
  if (per_language.empty()) {
    throw std::invalid_argument("macro_average: empty input");
  }
  double total = 0.0;
  for (const auto& [lang, value] : per_language) total += value;
  return total / static_cast<double>(per_language.size());
}

void MetricReport::set(const std::string& metric, const std::string& lang,
                       double value) {
  values_[metric][lang] = value;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [metric, langs] : values_) {
    nlohmann::json entry = nlohmann::json::object();
    for (const auto& [lang, value] : langs) entry[lang] = value;
    out[metric] = {{"per_language", entry},
                   {"macro_average", macro_average(langs)}};
  }
  return out;
}

std::string MetricReport::to_table() const {
  std::set<std::string> langs;
  for (const auto& [metric, per_lang] : values_) {
    for (const auto& [lang, value] : per_lang) langs.insert(lang);
  }
  std::ostringstream out;
  out << std::left << std::setw(18) << "metric";
  for (const std::string& lang : langs) out << std::right << std::setw(10) << lang;
  out << std::right << std::setw(10) << "macro" << '\n';
  for (const auto& [metric, per_lang] : values_) {
    out << std::left << std::setw(18) << metric;
    for (const std::string& lang : langs) {
      const auto it = per_lang.find(lang);
      if (it == per_lang.end()) {
        out << std::right << std::setw(10) << "-";
      } else {
        out << std::right << std::setw(10) << std::fixed << std::setprecision(4)
            << it->second;
      }
    }
    out << std::right << std::setw(10) << std::fixed << std::setprecision(4)
        << macro_average(per_lang) << '\n';
  }
  return out.str();
}

}  // namespace clqa
