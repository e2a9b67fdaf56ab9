// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clqa {

// Cloze instance built from one anchor: the sentence with the anchor
// masked, the anchor text as the in-language answer, the linked English
// page title as its pseudo translation, and the title's entity type.
struct AnchorExample {
  std::string cloze_sentence;
  std::string answer_l;
  std::string answer_en;
  std::string entity_type;
  std::string lang;
};

struct MetaExample {
  std::string sentence;
  std::string wh_word;
  std::string answer;
  std::string transformed_question;
  std::string lang;
};

enum class PromptKind { kMetaGeneration, kIcl };

struct PromptText {
  std::string text;
  PromptKind kind = PromptKind::kMetaGeneration;
};

struct AnchorSpan {
  std::size_t begin = 0;  // byte offsets, [begin, end)
  std::size_t end = 0;
};

struct PageInfo {
  std::string english_title;
  std::string entity_type;
};

struct AnchorExtraction {
  std::vector<AnchorExample> examples;
  std::size_t skipped = 0;
};

// One example per anchor whose link resolves to an English page with a
// recognized entity type; anchors failing resolution are counted, not kept.
AnchorExtraction extract_anchor_examples(
    std::string_view sentence, const std::string& lang,
    const std::vector<AnchorSpan>& spans,
    const std::map<std::string, std::string>& links,
    const std::map<std::string, PageInfo>& pages,
    std::string_view placeholder = "<mask>");

enum class WhCategory { kWho, kWhere, kWhat, kWhen, kHowMuch, kHowMany };

// Entity-type rows: PERSON/NORP/ORG -> Who; GPE/LOC/FAC -> Where;
// PRODUCT/EVENT/WORKOFART/LAW/LANGUAGE -> What; TIME/DATE -> When;
// PERCENT/MONEY/QUANTITY -> How much; ORDINAL/CARDINAL -> How many.
std::optional<WhCategory> wh_category_for(const std::string& entity_type);
const std::vector<std::string>& known_entity_types();

// Per-language question-word lexicon; languages without an entry fall
// back to the English words.
class WhLexicon {
 public:
  static WhLexicon load_dir(const std::filesystem::path& dir);
  void set(const std::string& lang, WhCategory category, std::string word);
  std::optional<std::string> find(const std::string& lang,
                                  WhCategory category) const;

 private:
  std::map<std::string, std::map<WhCategory, std::string>> words_;
};

std::string english_wh_word(WhCategory category);
std::string choose_wh_word(const std::string& entity_type,
                           const std::string& lang,
                           const WhLexicon* lexicon = nullptr);

PromptText build_meta_prompt(const AnchorExample& example,
                             const std::string& wh_word);

struct IclInstance {
  std::string sentence;
  std::string wh_word;
  std::string answer;
  std::string lang;
};

// Header plus one Sentence/Question word/Answer/Transformed Question block
// per meta example (order fixed by a seeded shuffle), then the instance
// block ending right after "Transformed Question:".
PromptText build_icl_prompt(const std::vector<MetaExample>& meta,
                            const IclInstance& instance, std::uint64_t seed);

// Extracts the question after "The transformed question is:" (quotes
// optional); without the marker, falls back to the first line ending in a
// question mark. Throws when neither applies.
std::string parse_transformed_question(const std::string& response);

}  // namespace clqa
