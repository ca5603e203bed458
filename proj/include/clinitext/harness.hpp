#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "clinitext/backends.hpp"
#include "clinitext/errors.hpp"
#include "clinitext/summarizer.hpp"

namespace clinitext::harness {

enum class TaskKind { mcqa, answer_gen, summ_single, summ_multi, simplify, translate };

std::string_view task_kind_name(TaskKind t);
TaskKind parse_task_kind(std::string_view name);

struct McqaPayload {
  std::string question;
  std::optional<std::string> context;
  std::vector<std::string> options;
  std::size_t answer_index = 0;
};

struct AnswerGenPayload {
  std::string question;
  std::vector<std::string> reference_answers;
};

struct SummSinglePayload {
  std::string document;
  std::string reference_summary;
};

struct SummMultiPayload {
  std::vector<std::string> documents;
  std::string reference_summary;
};

struct SimplifyPayload {
  std::string source;
  std::string reference;
};

struct TranslatePayload {
  std::string source;
  std::string reference;
  std::string src_lang;
  std::string tgt_lang;
};

using Payload =
    std::variant<McqaPayload, AnswerGenPayload, SummSinglePayload, SummMultiPayload, SimplifyPayload, TranslatePayload>;

struct EvalItem {
  std::string id;
  Payload payload;
  std::size_t line = 0;  // source line, 0 when built in code
};

TaskKind task_of(const EvalItem& item);

// One dataset line <-> one item, using the exact field names of the task schema.
nlohmann::json item_to_json(const EvalItem& item);
// Throws SchemaError(line, field) on a schema violation.
EvalItem item_from_json(const nlohmann::json& j, TaskKind task, std::size_t line);

// Newline-delimited JSON records. Throws ParseError, SchemaError or DuplicateError,
// each carrying the 1-based line number; IoError when the file cannot be read.
std::vector<EvalItem> load_dataset(std::istream& in, TaskKind task);
std::vector<EvalItem> load_dataset(const std::filesystem::path& path, TaskKind task);

// ---------------------------------------------------------------------------
// Splitting

struct SplitConfig {
  double ratio = 0.85;  // train fraction
  std::uint64_t seed = 0;
  std::optional<std::size_t> carve_validation;

  void validate() const {
    if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must lie in (0,1)");
  }
};

template <typename T>
struct SplitResult {
  std::vector<T> train;
  std::vector<T> test;
  std::optional<std::vector<T>> validation;
};

// Uniform integer in [0, bound) from raw engine output (rejection sampling),
// so results do not depend on the standard library's distribution code.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = v.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// Fisher-Yates shuffle, train = first floor(ratio*n), test = the rest;
// carve_validation items move from the train tail into validation.
template <typename T>
SplitResult<T> split(std::vector<T> items, const SplitConfig& config) {
  config.validate();
  if (items.size() < 2) throw InvalidArgument("split needs at least 2 items");
  seeded_shuffle(items, config.seed);
  // The nudge keeps products like 0.29*100 = 28.999... flooring to 29.
  auto cut = static_cast<std::size_t>(config.ratio * static_cast<double>(items.size()) + 1e-9);
  if (cut > items.size()) cut = items.size();
  SplitResult<T> out;
  out.train.assign(std::make_move_iterator(items.begin()),
                   std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(cut)));
  out.test.assign(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(cut)),
                  std::make_move_iterator(items.end()));
  if (config.carve_validation) {
    const std::size_t carve = *config.carve_validation;
    if (carve >= out.train.size()) {
      throw InvalidArgument("carve_validation " + std::to_string(carve) + " must be smaller than the train size " +
                            std::to_string(out.train.size()));
    }
    auto from = out.train.end() - static_cast<std::ptrdiff_t>(carve);
    out.validation.emplace(std::make_move_iterator(from), std::make_move_iterator(out.train.end()));
    out.train.erase(from, out.train.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

struct ItemRecord {
  std::string id;
  std::optional<std::string> output;            // generated text
  std::optional<std::size_t> predicted_index;   // mcqa
  std::map<std::string, double> scores;         // per-item metric values / pooled counts
  std::vector<std::size_t> selected_sentences;  // textrank only
  nlohmann::json inputs = nlohmann::json::object();  // fields needed downstream (e.g. review sampling)
  std::optional<std::string> error;             // set when the item failed

  bool failed() const { return error.has_value(); }
};

struct EvalReport {
  TaskKind task = TaskKind::mcqa;
  std::string dataset;
  std::string model_id;
  std::size_t n_items = 0;
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::map<std::string, double> metrics;
  std::vector<ItemRecord> items;  // sorted by id
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

nlohmann::json report_to_json(const EvalReport& r);
// Throws ParseError when the document is not a well-formed report.
EvalReport report_from_json(const nlohmann::json& j);
// Canonical serialization: sorted keys, two-space indent, trailing newline.
std::string serialize(const EvalReport& r);
EvalReport read_report(const std::filesystem::path& path);

// Recomputes every aggregate from the per-item records (pooled counts for
// BLEU). Returns a description of the first mismatch, or nullopt.
std::optional<std::string> check_consistency(const EvalReport& r);

// ---------------------------------------------------------------------------
// Runners

inline constexpr std::string_view kPromptVersion = "v1";
inline constexpr std::string_view kAnswerPrompt = "Answer the consumer health question.\nQuestion: {question}\nAnswer:";
inline constexpr std::string_view kSummarizePrompt = "summarize: {document}";
inline constexpr std::string_view kSimplifyPrompt = "simplify: {source}";
inline constexpr std::string_view kTranslatePrompt = "translate: {source}";

struct RunOptions {
  std::size_t parallelism = 4;
  std::uint64_t seed = 0;
  std::string dataset_id;
  std::size_t max_new_tokens = 512;
  double temperature = 0.0;
};

struct TextRankEngine {
  std::size_t k = 3;
  summarizer::RankConfig config{};
};

using SummarizationEngine = std::variant<backends::GenerationBackend*, TextRankEngine>;

enum class SummaryMode { single, multi };

EvalReport run_mcqa(const std::vector<EvalItem>& items, backends::GenerationBackend& backend, const RunOptions& opts = {});
EvalReport run_answer_gen(const std::vector<EvalItem>& items, backends::GenerationBackend& backend,
                          const RunOptions& opts = {});
EvalReport run_summarization(const std::vector<EvalItem>& items, const SummarizationEngine& engine, SummaryMode mode,
                             const RunOptions& opts = {});
EvalReport run_simplification(const std::vector<EvalItem>& items, backends::GenerationBackend& backend,
                              const RunOptions& opts = {});
// Throws InvalidArgument when items mix language pairs.
EvalReport run_translation(const std::vector<EvalItem>& items, backends::GenerationBackend& backend,
                           const RunOptions& opts = {});

// Candidate BLEU minus baseline BLEU for two translation reports.
double delta_bleu(const EvalReport& candidate, const EvalReport& baseline);

}  // namespace clinitext::harness
