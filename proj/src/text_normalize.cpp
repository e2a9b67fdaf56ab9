// SPDX-License-Identifier: Apache-2.0
#include "clqa/text_normalize.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <stdexcept>

namespace clqa {
namespace {

icu::UnicodeString nfkc_lower(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("ICU NFKC normalizer unavailable");
  }
  const icu::UnicodeString raw = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfkc->normalize(raw, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("ICU NFKC normalization failed");
  }
  normalized.toLower(icu::Locale::getRoot());
  return normalized;
}

}  // namespace

std::string normalize_for_match(std::string_view text) {
  std::string out;
  nfkc_lower(text).toUTF8String(out);
  return out;
}

std::string normalize_answer(std::string_view text) {
  const icu::UnicodeString normalized = nfkc_lower(text);
  icu::UnicodeString cleaned;
  bool pending_space = false;
  for (int32_t i = 0; i < normalized.length();) {
    const UChar32 cp = normalized.char32At(i);
    i += U16_LENGTH(cp);
    if (u_ispunct(cp)) continue;
    if (u_isUWhiteSpace(cp)) {
      pending_space = cleaned.length() > 0;
      continue;
    }
    if (pending_space) {
      cleaned.append(static_cast<UChar32>(' '));
      pending_space = false;
    }
    cleaned.append(cp);
  }
  std::string out;
  cleaned.toUTF8String(out);
  return out;
}

}  // namespace clqa
