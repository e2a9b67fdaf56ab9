// SPDX-License-Identifier: Apache-2.0
//
// clqa: batch front end for the cross-lingual QA retrieval kernels.
// Subcommands: mine, index, retrieve, targets, synth, refresh, eval.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clqa/corpus_io.hpp"
#include "clqa/distill.hpp"
#include "clqa/evalkit.hpp"
#include "clqa/index.hpp"
#include "clqa/jsonl.hpp"
#include "clqa/mining.hpp"
#include "clqa/parallel.hpp"
#include "clqa/pipeline.hpp"
#include "clqa/synth.hpp"
#include "clqa/tensor_bundle.hpp"
#include "clqa/text_normalize.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

constexpr double kDefaultThreshold = 1.5;
constexpr double kCjkThreshold = 1.65;

// Languages masked by string match during cloze construction.
const std::set<std::string>& latin_script_langs() {
  static const std::set<std::string> langs{
      "en", "fi", "es", "de", "fr", "it", "pt", "sv", "da", "nl",
      "no", "ms", "tr", "hu", "pl", "vi", "id", "ca", "cs", "ro"};
  return langs;
}

bool is_cjk_lang(const std::string& lang) {
  return lang == "ja" || lang.rfind("zh", 0) == 0;
}

struct SharedOpts {
  std::uint64_t seed = 0;
  unsigned threads = clqa::default_thread_count();
  std::string config;
};

void add_shared(CLI::App* cmd, SharedOpts& opts) {
  cmd->add_option("--seed", opts.seed, "Seed for all randomness")
      ->capture_default_str();
  cmd->add_option("--threads", opts.threads, "Worker thread bound")
      ->capture_default_str();
  cmd->add_option("--config", opts.config,
                  "JSON config file; command-line flags override it");
}

clqa::SentencePool load_pool(const std::filesystem::path& path,
                             const clqa::TensorBundle& bundle) {
  clqa::SentencePool pool;
  std::vector<std::string> refs;
  clqa::read_jsonl(path, [&](std::size_t, const json& j) {
    clqa::SentenceRecord record;
    record.text = j.at("text").get<std::string>();
    const std::string lang = j.at("lang").get<std::string>();
    if (pool.sentences.empty()) {
      pool.lang = lang;
    } else if (lang != pool.lang) {
      throw std::invalid_argument("pool mixes languages " + pool.lang +
                                  " and " + lang);
    }
    if (j.contains("spans")) {
      for (const json& s : j.at("spans")) {
        record.spans.push_back({s.at("begin").get<std::size_t>(),
                                s.at("end").get<std::size_t>(),
                                s.value("label", std::string{})});
      }
    }
    refs.push_back(j.at("embedding").get<std::string>());
    pool.sentences.push_back(std::move(record));
  });
  if (pool.sentences.empty()) {
    throw std::invalid_argument("empty sentence pool: " + path.string());
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const Eigen::VectorXf v = clqa::dense_from_array(bundle.at(refs[i]));
    if (i == 0) {
      pool.embeddings.resize(static_cast<Eigen::Index>(refs.size()), v.size());
    } else if (v.size() != pool.embeddings.cols()) {
      throw std::invalid_argument("embedding dimension mismatch at " + refs[i]);
    }
    pool.embeddings.row(static_cast<Eigen::Index>(i)) = v.transpose();
  }
  return pool;
}

json loss_report_json(const clqa::LossReport& report) {
  return json{{"alpha", report.alpha},
              {"kl", report.kl},
              {"reader", report.reader},
              {"align", report.align},
              {"total", report.total}};
}

// ---------------------------------------------------------------------------
// mine

struct MineOpts {
  SharedOpts shared;
  std::string en_pool, l_pool, embeddings, out;
  std::size_t knn = 4;
  std::string threshold = "auto";
  std::string latin = "auto";
  std::string placeholder = "<mask>";
  std::size_t balance_total = 0;
  double alpha_sample = 0.5;
};

int cmd_mine(const MineOpts& opts) {
  const clqa::TensorBundle bundle = clqa::load_tensor_bundle(opts.embeddings);
  const clqa::SentencePool en = load_pool(opts.en_pool, bundle);
  const clqa::SentencePool l = load_pool(opts.l_pool, bundle);

  clqa::MiningConfig config;
  config.knn_k = opts.knn;
  config.placeholder = opts.placeholder;
  if (opts.threshold == "auto") {
    config.threshold = is_cjk_lang(l.lang) ? kCjkThreshold : kDefaultThreshold;
  } else {
    config.threshold = std::stod(opts.threshold);
  }
  if (opts.latin == "auto") {
    config.l_is_latin = latin_script_langs().count(l.lang) != 0;
  } else if (opts.latin == "true") {
    config.l_is_latin = true;
  } else if (opts.latin == "false") {
    config.l_is_latin = false;
  } else {
    throw CLI::ValidationError("--latin must be auto, true or false");
  }

  std::vector<clqa::ParallelPair> pairs =
      clqa::mine_parallel_pairs(en, l, config);
  if (opts.balance_total > 0) {
    pairs = clqa::select_balanced(pairs, opts.alpha_sample, opts.balance_total);
  }
  std::string out;
  for (const clqa::ParallelPair& pair : pairs) {
    out += json{{"en_cloze", pair.en_cloze},
                {"l_cloze", pair.l_cloze},
                {"answer", pair.answer},
                {"margin", pair.margin},
                {"langs", json::array({"en", pair.l_lang})}}
               .dump();
    out += '\n';
  }
  clqa::write_file_atomic(opts.out, out);
  std::cerr << "mined " << pairs.size() << " pairs (threshold "
            << config.threshold << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// index

struct IndexOpts {
  SharedOpts shared;
  std::string corpus, embeddings, out;
  std::string mode = "multi_vector";
  Eigen::Index head = 6;
  std::size_t passage_cap = 200;
};

int cmd_index(const IndexOpts& opts) {
  clqa::LoadOptions load;
  load.passage_token_cap = opts.passage_cap;
  const clqa::Corpus corpus = clqa::load_corpus(opts.corpus, load);
  const clqa::TensorBundle bundle = clqa::load_tensor_bundle(opts.embeddings);
  const clqa::RetrievalIndex index = clqa::RetrievalIndex::build(
      corpus, bundle, clqa::index_mode_from_string(opts.mode), opts.head);
  index.save(opts.out);
  std::cerr << "indexed " << index.size() << " passages (" << opts.mode
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// retrieve

struct RetrieveOpts {
  SharedOpts shared;
  std::string index_dir, corpus, embeddings;
  std::string queries, query_embeddings, out;
  std::string mode = "multi_vector";
  Eigen::Index head = 6;
  std::size_t k = 100;
  std::size_t budget = 0;
  std::size_t query_cap = 50;
};

clqa::RetrievalIndex open_index(const std::string& index_dir,
                                const std::string& corpus,
                                const std::string& embeddings,
                                const std::string& mode, Eigen::Index head,
                                std::optional<clqa::Corpus>& corpus_store) {
  if (!index_dir.empty()) {
    return clqa::RetrievalIndex::load(index_dir);
  }
  if (corpus.empty() || embeddings.empty()) {
    throw CLI::ValidationError(
        "either --index or --corpus with --embeddings is required");
  }
  corpus_store = clqa::load_corpus(corpus);
  return clqa::RetrievalIndex::build(*corpus_store,
                                     clqa::load_tensor_bundle(embeddings),
                                     clqa::index_mode_from_string(mode), head);
}

clqa::ScoreList search_with_bundle(const clqa::RetrievalIndex& index,
                                   const clqa::TensorBundle& bundle,
                                   const std::string& query_id, std::size_t k) {
  const clqa::TensorArray& array = bundle.at(query_id);
  if (index.mode() == clqa::IndexMode::kDense) {
    return index.search_topk(clqa::dense_from_array(array), k);
  }
  return index.search_topk(clqa::embedding_from_array(array), k);
}

int cmd_retrieve(const RetrieveOpts& opts) {
  std::optional<clqa::Corpus> corpus_store;
  const clqa::RetrievalIndex index = open_index(
      opts.index_dir, opts.corpus, opts.embeddings, opts.mode, opts.head,
      corpus_store);
  clqa::LoadOptions load;
  load.query_token_cap = opts.query_cap;
  const std::vector<clqa::Query> queries =
      clqa::load_queries(opts.queries, load);
  const clqa::TensorBundle query_bundle =
      clqa::load_tensor_bundle(opts.query_embeddings);

  std::optional<clqa::Corpus> slice_corpus;
  if (opts.budget > 0) {
    if (corpus_store.has_value()) {
      slice_corpus = std::move(corpus_store);
    } else if (!opts.corpus.empty()) {
      slice_corpus = clqa::load_corpus(opts.corpus);
    } else {
      throw CLI::ValidationError("--budget needs --corpus for token counts");
    }
  }

  std::vector<clqa::ScoreList> results(queries.size());
  clqa::parallel_for(queries.size(), opts.shared.threads, [&](std::size_t i) {
    results[i] = search_with_bundle(index, query_bundle, queries[i].id, opts.k);
  });

  std::string out;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    json ranking = json::array();
    for (std::size_t r = 0; r < results[i].ids.size(); ++r) {
      ranking.push_back(
          {{"id", results[i].ids[r]},
           {"score", results[i].scores[static_cast<Eigen::Index>(r)]}});
    }
    json line{{"query", queries[i].id}, {"ranking", ranking}};
    if (opts.budget > 0) {
      const clqa::TokenSlice slice =
          clqa::token_budget_slice(results[i], *slice_corpus, opts.budget);
      json entries = json::array();
      for (const clqa::TokenSliceEntry& e : slice.entries) {
        entries.push_back({{"id", e.id}, {"tokens", e.tokens}});
      }
      line["slice"] =
          json{{"total_tokens", slice.total_tokens}, {"entries", entries}};
    }
    out += line.dump();
    out += '\n';
  }
  clqa::write_file_atomic(opts.out, out);
  std::cerr << "retrieved top-" << opts.k << " for " << queries.size()
            << " queries\n";
  return 0;
}

// ---------------------------------------------------------------------------
// targets

struct TargetsOpts {
  SharedOpts shared;
  std::string bundle, out;
  double alpha = 8.0;
  double temperature = 1.0;
};

clqa::Distribution scores_to_distribution(const clqa::TensorArray& array,
                                          const std::vector<std::string>& ids,
                                          double temperature) {
  if (array.data.size() != ids.size()) {
    throw std::invalid_argument("tensor " + array.name +
                                " length does not match candidate count");
  }
  clqa::ScoreList list;
  list.ids = ids;
  list.scores = array.as_vector().cast<double>();
  return clqa::retrieval_distribution(list, temperature);
}

clqa::AnswerLogProbs log_probs_from(const clqa::TensorArray& array) {
  clqa::AnswerLogProbs lp;
  lp.values = array.as_vector().cast<double>();
  return lp;
}

std::vector<clqa::Distribution> step_distributions(
    const clqa::TensorArray& array) {
  if (array.shape.size() != 2) {
    throw std::invalid_argument("tensor " + array.name +
                                ": expected shape [steps, vocab]");
  }
  const auto steps = static_cast<Eigen::Index>(array.shape[0]);
  const auto vocab = static_cast<Eigen::Index>(array.shape[1]);
  std::vector<std::string> ids;
  for (Eigen::Index v = 0; v < vocab; ++v) ids.push_back(std::to_string(v));
  std::vector<clqa::Distribution> out;
  const auto m = array.as_matrix(steps, vocab);
  for (Eigen::Index t = 0; t < steps; ++t) {
    out.push_back(clqa::make_distribution(
        ids, m.row(t).transpose().cast<double>()));
  }
  return out;
}

int cmd_targets(const TargetsOpts& opts) {
  const clqa::TensorBundle bundle = clqa::load_tensor_bundle(opts.bundle);

  clqa::CrossAttentionBundle ca;
  for (const clqa::TensorArray& array : bundle.arrays()) {
    if (array.name.rfind("ca.", 0) != 0) continue;
    if (array.shape.size() != 2) {
      throw std::invalid_argument("tensor " + array.name +
                                  ": expected shape [heads, tokens]");
    }
    const auto heads = static_cast<Eigen::Index>(array.shape[0]);
    const auto tokens = static_cast<Eigen::Index>(array.shape[1]);
    if (ca.ids.empty()) {
      ca.head_count = heads;
    } else if (heads != ca.head_count) {
      throw std::invalid_argument("tensor " + array.name +
                                  ": inconsistent head count");
    }
    ca.ids.push_back(array.name.substr(3));
    ca.scores.push_back(array.as_matrix(heads, tokens).cast<double>());
  }
  if (ca.ids.empty()) {
    throw std::invalid_argument("bundle has no ca.<passage> arrays");
  }
  const clqa::Distribution p_ca = clqa::cross_attention_target(ca);

  const clqa::Distribution p_be = scores_to_distribution(
      bundle.at("retrieval_scores"), ca.ids, opts.temperature);
  const clqa::LossReport e2e = clqa::stage2_loss(
      p_be, p_ca, log_probs_from(bundle.at("answer_log_probs")), opts.alpha);

  json report{
      {"p_ca",
       {{"ids", p_ca.ids},
        {"probs", std::vector<double>(p_ca.probs.data(),
                                      p_ca.probs.data() + p_ca.probs.size())}}},
      {"e2e", loss_report_json(e2e)}};

  if (bundle.contains("teacher_scores")) {
    const clqa::Distribution teacher = scores_to_distribution(
        bundle.at("teacher_scores"), ca.ids, opts.temperature);
    const clqa::Distribution student_l = scores_to_distribution(
        bundle.at("student_scores_l"), ca.ids, opts.temperature);
    const clqa::Distribution student_en = scores_to_distribution(
        bundle.at("student_scores_en"), ca.ids, opts.temperature);
    std::vector<clqa::Distribution> steps_en, steps_l;
    if (bundle.contains("answer_token_dists_en")) {
      steps_en = step_distributions(bundle.at("answer_token_dists_en"));
      steps_l = step_distributions(bundle.at("answer_token_dists_l"));
    }
    const clqa::LossReport stage1 = clqa::stage1_losses(
        student_l, student_en, teacher,
        log_probs_from(bundle.at("answer_log_probs_en")),
        log_probs_from(bundle.at("answer_log_probs_l")), steps_en, steps_l,
        opts.alpha);
    report["stage1"] = loss_report_json(stage1);
  }

  clqa::write_file_atomic(opts.out, report.dump(2) + "\n");
  std::cerr << "targets written to " << opts.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
  SharedOpts shared;
  std::string anchors, pages, meta, lexicons, responses, out;
  std::size_t n = 3;
  std::vector<std::string> multipliers;
};

int cmd_synth_responses(const SynthOpts& opts) {
  std::string out;
  std::size_t parsed = 0, failed = 0;
  clqa::read_jsonl(opts.responses, [&](std::size_t, const json& j) {
    json record = json::object();
    if (j.contains("id")) record["id"] = j.at("id");
    try {
      record["question"] =
          clqa::parse_transformed_question(j.at("response").get<std::string>());
      ++parsed;
    } catch (const std::runtime_error& e) {
      record["error"] = e.what();
      ++failed;
    }
    out += record.dump();
    out += '\n';
  });
  clqa::write_file_atomic(opts.out, out);
  std::cerr << "parsed " << parsed << " questions, " << failed << " failures\n";
  return 0;
}

int cmd_synth(const SynthOpts& opts) {
  if (!opts.responses.empty()) return cmd_synth_responses(opts);
  if (opts.anchors.empty() || opts.pages.empty()) {
    throw CLI::ValidationError(
        "synth needs --anchors and --pages, or --responses");
  }

  std::map<std::string, clqa::PageInfo> pages;
  clqa::read_jsonl(opts.pages, [&](std::size_t, const json& j) {
    pages[j.at("id").get<std::string>()] = {
        j.at("english_title").get<std::string>(),
        j.at("entity_type").get<std::string>()};
  });

  std::optional<clqa::WhLexicon> lexicon;
  if (!opts.lexicons.empty()) {
    lexicon = clqa::WhLexicon::load_dir(opts.lexicons);
  }

  std::map<std::string, std::vector<clqa::MetaExample>> meta_by_lang;
  if (!opts.meta.empty()) {
    clqa::read_jsonl(opts.meta, [&](std::size_t, const json& j) {
      clqa::MetaExample m{j.at("sentence").get<std::string>(),
                          j.at("wh_word").get<std::string>(),
                          j.at("answer").get<std::string>(),
                          j.at("transformed_question").get<std::string>(),
                          j.at("lang").get<std::string>()};
      meta_by_lang[m.lang].push_back(std::move(m));
    });
  }

  std::map<std::string, std::size_t> multiplier;
  for (const std::string& spec : opts.multipliers) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--multiplier expects lang=count");
    }
    multiplier[spec.substr(0, eq)] =
        static_cast<std::size_t>(std::stoul(spec.substr(eq + 1)));
  }

  std::string out;
  std::size_t instance_index = 0, skipped_total = 0;
  clqa::read_jsonl(opts.anchors, [&](std::size_t, const json& j) {
    const std::string sentence = j.at("sentence").get<std::string>();
    const std::string lang = j.at("lang").get<std::string>();
    std::vector<clqa::AnchorSpan> spans;
    std::map<std::string, std::string> links;
    for (const json& s : j.at("spans")) {
      const clqa::AnchorSpan span{s.at("begin").get<std::size_t>(),
                                  s.at("end").get<std::size_t>()};
      spans.push_back(span);
      links.emplace(sentence.substr(span.begin, span.end - span.begin),
                    s.at("target").get<std::string>());
    }
    const clqa::AnchorExtraction extraction =
        clqa::extract_anchor_examples(sentence, lang, spans, links, pages);
    skipped_total += extraction.skipped;
    for (const clqa::AnchorExample& example : extraction.examples) {
      const std::string wh = clqa::choose_wh_word(
          example.entity_type, lang, lexicon ? &*lexicon : nullptr);
      const std::size_t reps = multiplier.count(lang) ? multiplier.at(lang) : 1;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        clqa::PromptText prompt;
        if (opts.meta.empty()) {
          prompt = clqa::build_meta_prompt(example, wh);
        } else {
          const auto pool = meta_by_lang.find(lang);
          if (pool == meta_by_lang.end() || pool->second.size() < opts.n) {
            throw std::invalid_argument("not enough meta examples for " + lang);
          }
          const std::uint64_t instance_seed =
              opts.shared.seed + 1000003ULL * instance_index + 7919ULL * rep;
          std::mt19937_64 rng(instance_seed);
          std::vector<std::size_t> order(pool->second.size());
          for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
          for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng() % i]);
          }
          std::vector<clqa::MetaExample> sample;
          for (std::size_t i = 0; i < opts.n; ++i) {
            sample.push_back(pool->second[order[i]]);
          }
          prompt = clqa::build_icl_prompt(
              sample,
              {example.cloze_sentence, wh, example.answer_l, example.lang},
              instance_seed);
        }
        out += json{{"lang", lang},
                    {"kind", prompt.kind == clqa::PromptKind::kIcl
                                 ? "icl"
                                 : "meta-generation"},
                    {"sentence", example.cloze_sentence},
                    {"wh_word", wh},
                    {"answer_l", example.answer_l},
                    {"answer_en", example.answer_en},
                    {"entity_type", example.entity_type},
                    {"prompt", prompt.text}}
                   .dump();
        out += '\n';
      }
    }
    ++instance_index;
  });
  clqa::write_file_atomic(opts.out, out);
  std::cerr << "skipped " << skipped_total << " unresolvable anchors\n";
  return 0;
}

// ---------------------------------------------------------------------------
// refresh

struct RefreshOpts {
  SharedOpts shared;
  std::string state, queries, query_embeddings, out;
  std::string index_dir, corpus, embeddings;
  std::string mode = "multi_vector";
  Eigen::Index head = 6;
  std::size_t total_steps = 0;
  std::size_t interval = 1000;
  std::size_t k = 100;
};

int cmd_refresh(const RefreshOpts& opts) {
  std::optional<clqa::Corpus> corpus_store;
  const clqa::RetrievalIndex index = open_index(
      opts.index_dir, opts.corpus, opts.embeddings, opts.mode, opts.head,
      corpus_store);
  const std::vector<clqa::Query> queries = clqa::load_queries(opts.queries);
  const clqa::TensorBundle query_bundle =
      clqa::load_tensor_bundle(opts.query_embeddings);

  // Retrieval fan-out is parallel; results land in a map read by the
  // sequential cycle below.
  const auto retrieve_all = [&]() {
    std::vector<clqa::ScoreList> results(queries.size());
    clqa::parallel_for(queries.size(), opts.shared.threads, [&](std::size_t i) {
      results[i] =
          search_with_bundle(index, query_bundle, queries[i].id, opts.k);
    });
    std::map<std::string, clqa::ScoreList> by_id;
    for (std::size_t i = 0; i < queries.size(); ++i) {
      by_id[queries[i].id] = std::move(results[i]);
    }
    return by_id;
  };

  clqa::TrainingSetState state;
  if (!opts.state.empty()) {
    state = clqa::load_state(opts.state);
  } else {
    // initial fill is generation 0, distinct from scheduled refreshes
    for (const auto& [id, list] : retrieve_all()) {
      std::vector<std::string> ids(list.ids.begin(), list.ids.end());
      if (ids.size() > opts.k) ids.resize(opts.k);
      state.retrieved[id] = std::move(ids);
    }
    state.generation = 0;
  }

  const clqa::RefreshSchedule schedule =
      clqa::plan_refresh(opts.total_steps, opts.interval);
  for (const std::size_t step : schedule.refresh_steps) {
    const auto results = retrieve_all();
    const clqa::RefreshResult cycle = clqa::run_refresh_cycle(
        state,
        [&](const std::string& id) {
          const auto it = results.find(id);
          if (it == results.end()) {
            throw std::runtime_error("no retrieval result for " + id);
          }
          return it->second;
        },
        opts.k);
    if (cycle.error.has_value()) {
      throw std::runtime_error("refresh aborted at step " +
                               std::to_string(step) + ": " + *cycle.error);
    }
    state = cycle.state;
    std::cerr << "refreshed at step " << step << " (generation "
              << state.generation << ")\n";
  }
  clqa::save_state(state, opts.out);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  SharedOpts shared;
  std::string queries, corpus, ranked, predictions, out;
  std::size_t budget = 5000;
  std::size_t top_n = 100;
};

int cmd_eval(const EvalOpts& opts) {
  const clqa::Corpus corpus = clqa::load_corpus(opts.corpus);
  const std::vector<clqa::Query> queries = clqa::load_queries(opts.queries);

  std::map<std::string, clqa::ScoreList> ranked;
  clqa::read_jsonl(opts.ranked, [&](std::size_t, const json& j) {
    clqa::ScoreList list;
    const json& ranking = j.at("ranking");
    list.scores.resize(static_cast<Eigen::Index>(ranking.size()));
    Eigen::Index i = 0;
    for (const json& entry : ranking) {
      list.ids.push_back(entry.at("id").get<std::string>());
      list.scores[i++] = entry.at("score").get<double>();
    }
    ranked[j.at("query").get<std::string>()] = std::move(list);
  });

  std::map<std::string, clqa::TokenSlice> slices;
  for (const auto& [id, list] : ranked) {
    slices[id] = clqa::token_budget_slice(list, corpus, opts.budget);
  }

  const std::map<std::string, double> recall =
      clqa::recall_at_tokens(queries, slices, corpus, opts.budget);
  const clqa::RecallByLanguage by_lang = clqa::recall_at_passages_by_language(
      queries, ranked, corpus, opts.top_n);

  clqa::MetricReport table;
  const std::string recall_name =
      "recall_at_" + std::to_string(opts.budget) + "t";
  for (const auto& [lang, value] : recall) table.set(recall_name, lang, value);
  for (const auto& [lang, value] : by_lang.target) {
    table.set("recall_target@" + std::to_string(opts.top_n), lang, value);
  }
  for (const auto& [lang, value] : by_lang.any) {
    table.set("recall_any@" + std::to_string(opts.top_n), lang, value);
  }

  json report{
      {"recall",
       {{"budget_tokens", opts.budget},
        {"per_language", recall},
        {"macro_average", clqa::macro_average(recall)}}},
      {"recall_at_passages",
       {{"top_n", opts.top_n},
        {"target",
         {{"per_language", by_lang.target},
          {"macro_average", clqa::macro_average(by_lang.target)}}},
        {"any",
         {{"per_language", by_lang.any},
          {"macro_average", clqa::macro_average(by_lang.any)}}}}}};

  if (!opts.predictions.empty()) {
    std::map<std::string, std::string> predictions;
    clqa::read_jsonl(opts.predictions, [&](std::size_t, const json& j) {
      predictions[j.at("id").get<std::string>()] =
          j.at("text").get<std::string>();
    });
    const auto qa = clqa::qa_metrics(predictions, queries);
    std::map<std::string, double> f1, em, bleu;
    for (const auto& [lang, scores] : qa) {
      f1[lang] = scores.f1;
      em[lang] = scores.em;
      bleu[lang] = scores.bleu;
      table.set("f1", lang, scores.f1);
      table.set("em", lang, scores.em);
      table.set("bleu", lang, scores.bleu);
    }
    report["qa"] = {
        {"f1",
         {{"per_language", f1}, {"macro_average", clqa::macro_average(f1)}}},
        {"em",
         {{"per_language", em}, {"macro_average", clqa::macro_average(em)}}},
        {"bleu",
         {{"per_language", bleu}, {"macro_average", clqa::macro_average(bleu)}}}};
  }

  clqa::write_file_atomic(opts.out, report.dump(2) + "\n");
  std::cout << table.to_table();
  return 0;
}

// ---------------------------------------------------------------------------
// config file support: flags override file values

std::vector<std::string> inject_config(const std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") config_path = args[i + 1];
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) {
    throw CLI::ValidationError("cannot open config file: " + config_path);
  }
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw CLI::ValidationError("malformed config file: " +
                               std::string(e.what()));
  }
  if (!config.is_object()) {
    throw CLI::ValidationError("config file must hold a JSON object");
  }
  std::set<std::string> given;
  for (const std::string& a : args) {
    if (a.rfind("--", 0) == 0) given.insert(a);
  }
  std::vector<std::string> merged;
  merged.push_back(args.front());  // subcommand
  for (const auto& [key, value] : config.items()) {
    const std::string flag = "--" + key;
    if (given.count(flag)) continue;
    merged.push_back(flag);
    merged.push_back(value.is_string() ? value.get<std::string>()
                                       : value.dump());
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual retrieval and QA data kernels"};
  app.require_subcommand(1);

  MineOpts mine;
  CLI::App* mine_cmd =
      app.add_subcommand("mine", "Mine parallel cloze queries from two pools");
  add_shared(mine_cmd, mine.shared);
  mine_cmd->add_option("--en-pool", mine.en_pool, "English sentence JSONL")
      ->required();
  mine_cmd
      ->add_option("--l-pool", mine.l_pool, "Target-language sentence JSONL")
      ->required();
  mine_cmd
      ->add_option("--embeddings", mine.embeddings,
                   "Tensor bundle with sentence embeddings")
      ->required();
  mine_cmd->add_option("--knn", mine.knn, "Neighbourhood size k")
      ->capture_default_str();
  mine_cmd
      ->add_option("--threshold", mine.threshold,
                   "Margin threshold; auto = 1.5 (1.65 for ja/zh)")
      ->capture_default_str();
  mine_cmd
      ->add_option("--latin", mine.latin,
                   "Mask answers in the L sentence: auto|true|false")
      ->capture_default_str();
  mine_cmd->add_option("--placeholder", mine.placeholder, "Mask token")
      ->capture_default_str();
  mine_cmd
      ->add_option("--balance-total", mine.balance_total,
                   "Keep this many pairs via balanced sampling (0 = all)")
      ->capture_default_str();
  mine_cmd
      ->add_option("--alpha-sample", mine.alpha_sample,
                   "Balanced-sampling smoothing exponent")
      ->capture_default_str();
  mine_cmd->add_option("--out", mine.out, "Output pairs JSONL")->required();

  IndexOpts index;
  CLI::App* index_cmd = app.add_subcommand("index", "Build a retrieval index");
  add_shared(index_cmd, index.shared);
  index_cmd->add_option("--corpus", index.corpus, "Passage JSONL")->required();
  index_cmd
      ->add_option("--embeddings", index.embeddings,
                   "Tensor bundle, one array per passage id")
      ->required();
  index_cmd->add_option("--mode", index.mode, "dense or multi_vector")
      ->capture_default_str();
  index_cmd->add_option("--head", index.head, "Attention head index")
      ->capture_default_str();
  index_cmd
      ->add_option("--passage-cap", index.passage_cap,
                   "Token cap applied on load")
      ->capture_default_str();
  index_cmd->add_option("--out", index.out, "Index directory")->required();

  RetrieveOpts retrieve;
  CLI::App* retrieve_cmd =
      app.add_subcommand("retrieve", "Top-k search and token slices");
  add_shared(retrieve_cmd, retrieve.shared);
  retrieve_cmd->add_option("--index", retrieve.index_dir, "Index directory");
  retrieve_cmd->add_option("--corpus", retrieve.corpus,
                           "Passage JSONL (in-memory build / token counts)");
  retrieve_cmd->add_option("--embeddings", retrieve.embeddings,
                           "Passage embedding bundle (with --corpus)");
  retrieve_cmd->add_option("--mode", retrieve.mode, "dense or multi_vector")
      ->capture_default_str();
  retrieve_cmd->add_option("--head", retrieve.head, "Attention head index")
      ->capture_default_str();
  retrieve_cmd->add_option("--queries", retrieve.queries, "Query JSONL")
      ->required();
  retrieve_cmd
      ->add_option("--query-embeddings", retrieve.query_embeddings,
                   "Tensor bundle, one array per query id")
      ->required();
  retrieve_cmd->add_option("--k", retrieve.k, "Passages per query")
      ->capture_default_str();
  retrieve_cmd
      ->add_option("--budget", retrieve.budget,
                   "Token budget for slices (0 = no slices)")
      ->capture_default_str();
  retrieve_cmd
      ->add_option("--query-cap", retrieve.query_cap,
                   "Query token cap applied on load")
      ->capture_default_str();
  retrieve_cmd->add_option("--out", retrieve.out, "Ranked JSONL")->required();

  TargetsOpts targets;
  CLI::App* targets_cmd = app.add_subcommand(
      "targets", "Cross-attention targets and loss reports from a bundle");
  add_shared(targets_cmd, targets.shared);
  targets_cmd
      ->add_option("--bundle", targets.bundle, "Tensor bundle directory")
      ->required();
  targets_cmd->add_option("--alpha", targets.alpha, "Loss weight alpha")
      ->capture_default_str();
  targets_cmd
      ->add_option("--temperature", targets.temperature,
                   "Softmax temperature for score lists")
      ->capture_default_str();
  targets_cmd->add_option("--out", targets.out, "Report JSON")->required();

  SynthOpts synth;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "Anchors to prompts, or LLM responses to questions");
  add_shared(synth_cmd, synth.shared);
  synth_cmd->add_option("--anchors", synth.anchors, "Anchor sentence JSONL");
  synth_cmd->add_option("--pages", synth.pages, "Link-graph JSONL");
  synth_cmd->add_option("--meta", synth.meta,
                        "Meta-example JSONL (enables ICL prompts)");
  synth_cmd->add_option("--lexicons", synth.lexicons,
                        "Directory of per-language wh-word lexicons");
  synth_cmd->add_option("--n", synth.n, "Meta examples per ICL prompt")
      ->capture_default_str();
  synth_cmd->add_option("--multiplier", synth.multipliers,
                        "Per-language oversampling, lang=count (repeatable)");
  synth_cmd->add_option("--responses", synth.responses,
                        "LLM response JSONL to parse instead");
  synth_cmd->add_option("--out", synth.out, "Output JSONL")->required();

  RefreshOpts refresh;
  CLI::App* refresh_cmd =
      app.add_subcommand("refresh", "Run scheduled passage refresh cycles");
  add_shared(refresh_cmd, refresh.shared);
  refresh_cmd->add_option("--state", refresh.state, "Input state JSONL");
  refresh_cmd->add_option("--index", refresh.index_dir, "Index directory");
  refresh_cmd->add_option("--corpus", refresh.corpus,
                          "Passage JSONL (in-memory build)");
  refresh_cmd->add_option("--embeddings", refresh.embeddings,
                          "Passage embedding bundle (with --corpus)");
  refresh_cmd->add_option("--mode", refresh.mode, "dense or multi_vector")
      ->capture_default_str();
  refresh_cmd->add_option("--head", refresh.head, "Attention head index")
      ->capture_default_str();
  refresh_cmd->add_option("--queries", refresh.queries, "Query JSONL")
      ->required();
  refresh_cmd
      ->add_option("--query-embeddings", refresh.query_embeddings,
                   "Tensor bundle, one array per query id")
      ->required();
  refresh_cmd->add_option("--total-steps", refresh.total_steps, "Total steps")
      ->required();
  refresh_cmd->add_option("--interval", refresh.interval, "Refresh interval")
      ->capture_default_str();
  refresh_cmd->add_option("--k", refresh.k, "Passages per query")
      ->capture_default_str();
  refresh_cmd->add_option("--out", refresh.out, "Output state JSONL")
      ->required();

  EvalOpts eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Retrieval recall and QA metrics");
  add_shared(eval_cmd, eval.shared);
  eval_cmd->add_option("--queries", eval.queries, "Query JSONL with answers")
      ->required();
  eval_cmd->add_option("--corpus", eval.corpus, "Passage JSONL")->required();
  eval_cmd->add_option("--ranked", eval.ranked, "Ranked JSONL from retrieve")
      ->required();
  eval_cmd->add_option("--budget", eval.budget, "Token budget for recall")
      ->capture_default_str();
  eval_cmd->add_option("--top-n", eval.top_n, "Passage cutoff for R@N")
      ->capture_default_str();
  eval_cmd->add_option("--predictions", eval.predictions,
                       "Prediction JSONL (id, text) for QA metrics");
  eval_cmd->add_option("--out", eval.out, "Report JSON")->required();

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty()) args = inject_config(args);
    std::vector<const char*> cargs;
    cargs.push_back(argv[0]);
    for (const std::string& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()),
              const_cast<char**>(cargs.data()));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    std::cerr << app.help() << "\n";
    return 2;
  }

  try {
    if (mine_cmd->parsed()) return cmd_mine(mine);
    if (index_cmd->parsed()) return cmd_index(index);
    if (retrieve_cmd->parsed()) return cmd_retrieve(retrieve);
    if (targets_cmd->parsed()) return cmd_targets(targets);
    if (synth_cmd->parsed()) return cmd_synth(synth);
    if (refresh_cmd->parsed()) return cmd_refresh(refresh);
    if (eval_cmd->parsed()) return cmd_eval(eval);
  } catch (const CLI::ValidationError& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
