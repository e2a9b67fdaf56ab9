// SPDX-License-Identifier: Apache-2.0
#include "clqa/synth.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace clqa {
namespace {

const char* kMarker = "The transformed question is:";

const std::map<std::string, WhCategory>& category_table() {
  static const std::map<std::string, WhCategory> table{
      {"PERSON", WhCategory::kWho},      {"NORP", WhCategory::kWho},
      {"ORG", WhCategory::kWho},         {"GPE", WhCategory::kWhere},
      {"LOC", WhCategory::kWhere},       {"FAC", WhCategory::kWhere},
      {"PRODUCT", WhCategory::kWhat},    {"EVENT", WhCategory::kWhat},
      {"WORKOFART", WhCategory::kWhat},  {"LAW", WhCategory::kWhat},
      {"LANGUAGE", WhCategory::kWhat},   {"TIME", WhCategory::kWhen},
      {"DATE", WhCategory::kWhen},       {"PERCENT", WhCategory::kHowMuch},
      {"MONEY", WhCategory::kHowMuch},   {"QUANTITY", WhCategory::kHowMuch},
      {"ORDINAL", WhCategory::kHowMany}, {"CARDINAL", WhCategory::kHowMany}};
  return table;
}

const std::map<std::string, WhCategory>& category_keys() {
  static const std::map<std::string, WhCategory> keys{
      {"who", WhCategory::kWho},         {"where", WhCategory::kWhere},
      {"what", WhCategory::kWhat},       {"when", WhCategory::kWhen},
      {"how_much", WhCategory::kHowMuch}, {"how_many", WhCategory::kHowMany}};
  return keys;
}

std::string_view trimmed(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view unquoted(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

bool ends_with_question_mark(std::string_view line) {
  if (line.empty()) return false;
  if (line.back() == '?') return true;
  // fullwidth question mark U+FF1F
  return line.size() >= 3 && line.substr(line.size() - 3) == "\xEF\xBC\x9F";
}

// Deterministic Fisher-Yates; avoids std::shuffle, whose draws are
// implementation-defined.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

void append_block(std::string& out, std::string_view sentence,
                  std::string_view wh_word, std::string_view answer) {
  out += "Sentence: ";
  out += sentence;
  out += "\nQuestion word: ";
  out += wh_word;
  out += "\nAnswer: ";
  out += answer;
  out += "\nTransformed Question:";
}

}  // namespace

AnchorExtraction extract_anchor_examples(
    std::string_view sentence, const std::string& lang,
    const std::vector<AnchorSpan>& spans,
    const std::map<std::string, std::string>& links,
    const std::map<std::string, PageInfo>& pages, std::string_view placeholder) {
  AnchorExtraction result;
  for (const AnchorSpan& span : spans) {
    if (span.begin >= span.end || span.end > sentence.size()) {
      throw std::invalid_argument("extract_anchor_examples: malformed span");
    }
    const std::string anchor(sentence.substr(span.begin, span.end - span.begin));
    const auto link = links.find(anchor);
    if (link == links.end()) {
      ++result.skipped;
      continue;
    }
    const auto page = pages.find(link->second);
    if (page == pages.end() || page->second.english_title.empty() ||
        !wh_category_for(page->second.entity_type).has_value()) {
      ++result.skipped;
      continue;
    }
    AnchorExample example;
    example.cloze_sentence = std::string(sentence.substr(0, span.begin));
    example.cloze_sentence += placeholder;
    example.cloze_sentence += sentence.substr(span.end);
    example.answer_l = anchor;
    example.answer_en = page->second.english_title;
    example.entity_type = page->second.entity_type;
    example.lang = lang;
    result.examples.push_back(std::move(example));
  }
  return result;
}

std::optional<WhCategory> wh_category_for(const std::string& entity_type) {
  const auto it = category_table().find(entity_type);
  if (it == category_table().end()) return std::nullopt;
  return it->second;
}

const std::vector<std::string>& known_entity_types() {
  static const std::vector<std::string> types = [] {
    std::vector<std::string> t;
    for (const auto& [name, cat] : category_table()) t.push_back(name);
    return t;
  }();
  return types;
}

WhLexicon WhLexicon::load_dir(const std::filesystem::path& dir) {
  WhLexicon lexicon;
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("wh-word lexicon directory not found: " +
                             dir.string());
  }
  std::set<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.insert(entry.path());
  }
  for (const std::filesystem::path& file : files) {
    std::ifstream in(file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("malformed lexicon " + file.string() + ": " +
                               e.what());
    }
    const std::string lang = file.stem().string();
    for (const auto& [key, value] : j.items()) {
      const auto cat = category_keys().find(key);
      if (cat == category_keys().end()) {
        throw std::runtime_error("lexicon " + file.string() +
                                 ": unknown category " + key);
      }
      lexicon.set(lang, cat->second, value.get<std::string>());
    }
  }
  return lexicon;
}

void WhLexicon::set(const std::string& lang, WhCategory category,
                    std::string word) {
  words_[lang][category] = std::move(word);
}

std::optional<std::string> WhLexicon::find(const std::string& lang,
                                           WhCategory category) const {
  const auto it = words_.find(lang);
  if (it == words_.end()) return std::nullopt;
  const auto cat = it->second.find(category);
  if (cat == it->second.end()) return std::nullopt;
  return cat->second;
}

std::string english_wh_word(WhCategory category) {
  switch (category) {
    case WhCategory::kWho: return "Who";
    case WhCategory::kWhere: return "Where";
    case WhCategory::kWhat: return "What";
    case WhCategory::kWhen: return "When";
    case WhCategory::kHowMuch: return "How much";
    case WhCategory::kHowMany: return "How many";
  }
  throw std::logic_error("unreachable wh category");
}

std::string choose_wh_word(const std::string& entity_type,
                           const std::string& lang, const WhLexicon* lexicon) {
  const auto category = wh_category_for(entity_type);
  if (!category.has_value()) {
    throw std::invalid_argument("choose_wh_word: unknown entity type: " +
                                entity_type);
  }
  if (lexicon != nullptr) {
    if (auto word = lexicon->find(lang, *category); word.has_value()) {
      return *word;
    }
  }
  if (lang != "en" && !lang.empty()) {
    std::clog << "choose_wh_word: no lexicon entry for language '" << lang
              << "', falling back to English\n";
  }
  return english_wh_word(*category);
}

PromptText build_meta_prompt(const AnchorExample& example,
                             const std::string& wh_word) {
  if (example.cloze_sentence.empty() || example.answer_l.empty() ||
      wh_word.empty()) {
    throw std::invalid_argument("build_meta_prompt: empty field");
  }
  PromptText prompt;
  prompt.kind = PromptKind::kMetaGeneration;
  prompt.text = "Rewrite this sentence \"" + example.cloze_sentence +
                "\" into a natural question whose question word is \"" +
                wh_word + "\" and answer is \"" + example.answer_l +
                "\". Please respond in the format: \"" + kMarker + " {q}\"";
  return prompt;
}

PromptText build_icl_prompt(const std::vector<MetaExample>& meta,
                            const IclInstance& instance, std::uint64_t seed) {
  if (meta.empty()) {
    throw std::invalid_argument("build_icl_prompt: need at least one meta example");
  }
  for (const MetaExample& m : meta) {
    if (m.lang != instance.lang) {
      throw std::invalid_argument(
          "build_icl_prompt: meta example language mismatch");
    }
    if (m.sentence.empty() || m.wh_word.empty() || m.answer.empty() ||
        m.transformed_question.empty()) {
      throw std::invalid_argument("build_icl_prompt: empty meta example field");
    }
  }
  if (instance.sentence.empty() || instance.wh_word.empty() ||
      instance.answer.empty()) {
    throw std::invalid_argument("build_icl_prompt: empty instance field");
  }
  PromptText prompt;
  prompt.kind = PromptKind::kIcl;
  prompt.text =
      "Rewrite sentences into short and precise questions, using given "
      "question words and answers:\n";
  for (const std::size_t i : shuffled_order(meta.size(), seed)) {
    const MetaExample& m = meta[i];
    prompt.text += '\n';
    append_block(prompt.text, m.sentence, m.wh_word, m.answer);
    prompt.text += ' ';
    prompt.text += m.transformed_question;
    prompt.text += '\n';
  }
  prompt.text += '\n';
  append_block(prompt.text, instance.sentence, instance.wh_word,
               instance.answer);
  return prompt;
}

std::string parse_transformed_question(const std::string& response) {
  const std::size_t at = response.find(kMarker);
  if (at != std::string::npos) {
    std::size_t begin = at + std::string_view(kMarker).size();
    std::size_t end = response.find('\n', begin);
    if (end == std::string::npos) end = response.size();
    const std::string_view question =
        unquoted(trimmed(std::string_view(response).substr(begin, end - begin)));
    if (!question.empty()) return std::string(question);
  }
  std::size_t pos = 0;
  while (pos <= response.size()) {
    std::size_t end = response.find('\n', pos);
    if (end == std::string::npos) end = response.size();
    const std::string_view line =
        unquoted(trimmed(std::string_view(response).substr(pos, end - pos)));
    if (ends_with_question_mark(line)) return std::string(line);
    if (end == response.size()) break;
    pos = end + 1;
  }
  throw std::runtime_error("parse_transformed_question: unparseable response");
}

}  // namespace clqa
