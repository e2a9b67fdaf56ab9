// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace clqa {

struct Passage {
  std::string id;
  std::string lang;
  std::string title;
  std::string text;
  std::size_t token_count = 0;
};

struct Query {
  std::string id;
  std::string lang;
  std::string text;
  // language code -> gold answer strings; may be empty.
  std::map<std::string, std::vector<std::string>> answers;
};

struct CorpusManifest {
  std::string source;
  std::size_t passage_count = 0;
};

// Ordered passage collection with unique ids. Immutable once loaded;
// ordering is the file order and is stable across loads.
class Corpus {
 public:
  Corpus() = default;

  void add(Passage p) {
    auto [it, inserted] = by_id_.emplace(p.id, passages_.size());
    if (!inserted) {
      throw std::invalid_argument("duplicate passage id: " + p.id);
    }
    passages_.push_back(std::move(p));
    manifest_.passage_count = passages_.size();
  }

  bool contains(const std::string& id) const { return by_id_.count(id) != 0; }

  const Passage& at(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
      throw std::out_of_range("unknown passage id: " + id);
    }
    return passages_[it->second];
  }

  const std::vector<Passage>& passages() const { return passages_; }
  std::size_t size() const { return passages_.size(); }

  CorpusManifest& manifest() { return manifest_; }
  const CorpusManifest& manifest() const { return manifest_; }

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> by_id_;
  CorpusManifest manifest_;
};

}  // namespace clqa
