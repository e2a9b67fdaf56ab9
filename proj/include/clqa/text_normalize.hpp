// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace clqa {

// NFKC + lowercase (root locale); used for answer-containment checks.
std::string normalize_for_match(std::string_view text);

// NFKC, lowercase, punctuation stripped, whitespace collapsed to single
// spaces and trimmed; used by the QA metrics.
std::string normalize_answer(std::string_view text);

}  // namespace clqa
