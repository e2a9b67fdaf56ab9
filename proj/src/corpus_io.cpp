// SPDX-License-Identifier: Apache-2.0
#include "clqa/corpus_io.hpp"

#include <sstream>

#include "clqa/jsonl.hpp"
#include "clqa/tokenize.hpp"

namespace clqa {
namespace {

std::string require_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw std::invalid_argument(std::string("missing required field: ") + key);
  }
  return j.at(key).get<std::string>();
}

std::string optional_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) return {};
  return j.at(key).get<std::string>();
}

// Verifies a declared token_count, then truncates to the cap. Returns the
// stored text and its token count.
std::pair<std::string, std::size_t> capped_text(const nlohmann::json& j,
                                                std::string text,
                                                std::size_t cap) {
  const std::size_t full = count_tokens(text);
  if (j.contains("token_count")) {
    const std::size_t declared = j.at("token_count").get<std::size_t>();
    if (declared != full) {
      std::ostringstream msg;
      msg << "token_count " << declared << " does not match tokenizer count "
          << full;
      throw std::invalid_argument(msg.str());
    }
  }
  if (cap > 0 && full > cap) {
    text = std::string(token_prefix(text, cap));
    return {std::move(text), cap};
  }
  return {std::move(text), full};
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path,
                   const LoadOptions& options) {
  Corpus corpus;
  corpus.manifest().source = path.string();
  read_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
    Passage p;
    p.id = require_string(j, "id");
    p.lang = optional_string(j, "lang");
    p.title = optional_string(j, "title");
    auto [text, count] =
        capped_text(j, require_string(j, "text"), options.passage_token_cap);
    p.text = std::move(text);
    p.token_count = count;
    corpus.add(std::move(p));
  });
  return corpus;
}

std::vector<Query> load_queries(const std::filesystem::path& path,
                                const LoadOptions& options) {
  std::vector<Query> queries;
  std::unordered_map<std::string, std::size_t> seen;
  read_jsonl(path, [&](std::size_t, const nlohmann::json& j) {
    Query q;
    q.id = require_string(j, "id");
    if (!seen.emplace(q.id, queries.size()).second) {
      throw std::invalid_argument("duplicate query id: " + q.id);
    }
    q.lang = optional_string(j, "lang");
    auto [text, count] =
        capped_text(j, require_string(j, "text"), options.query_token_cap);
    q.text = std::move(text);
    if (q.text.empty()) {
      throw std::invalid_argument("query text must be non-empty: " + q.id);
    }
    if (j.contains("answers")) {
      for (const auto& [lang, list] : j.at("answers").items()) {
        q.answers[lang] = list.get<std::vector<std::string>>();
      }
    }
    queries.push_back(std::move(q));
  });
  return queries;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::string out;
  for (const Passage& p : corpus.passages()) {
    nlohmann::json j{{"id", p.id},
                     {"lang", p.lang},
                     {"title", p.title},
                     {"text", p.text},
                     {"token_count", p.token_count}};
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

void save_queries(const std::vector<Query>& queries,
                  const std::filesystem::path& path) {
  std::string out;
  for (const Query& q : queries) {
    nlohmann::json j{{"id", q.id}, {"lang", q.lang}, {"text", q.text}};
    if (!q.answers.empty()) {
      nlohmann::json a = nlohmann::json::object();
      for (const auto& [lang, list] : q.answers) a[lang] = list;
      j["answers"] = a;
    }
    out += j.dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace clqa
