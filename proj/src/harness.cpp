#include "clinitext/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "clinitext/metrics.hpp"
#include "clinitext/text_core.hpp"

namespace clinitext::harness {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view task_kind_name(TaskKind t) {
  switch (t) {
    case TaskKind::mcqa: return "mcqa";
    case TaskKind::answer_gen: return "answer_gen";
    case TaskKind::summ_single: return "summ_single";
    case TaskKind::summ_multi: return "summ_multi";
    case TaskKind::simplify: return "simplify";
    case TaskKind::translate: return "translate";
  }
  return "mcqa";
}

TaskKind parse_task_kind(std::string_view name) {
  for (auto t : {TaskKind::mcqa, TaskKind::answer_gen, TaskKind::summ_single, TaskKind::summ_multi,
                 TaskKind::simplify, TaskKind::translate}) {
    if (task_kind_name(t) == name) return t;
  }
  throw InvalidArgument("unknown task '" + std::string(name) +
                        "' (expected mcqa, answer_gen, summ_single, summ_multi, simplify or translate)");
}

TaskKind task_of(const EvalItem& item) { return static_cast<TaskKind>(item.payload.index()); }

// ---------------------------------------------------------------------------
// Dataset records

namespace {

[[noreturn]] void schema_fail(const std::string& field, std::size_t line, const std::string& why) {
  throw SchemaError(field, line, "line " + std::to_string(line) + ": field '" + field + "' " + why);
}

std::string req_string(const json& j, const char* field, std::size_t line, bool non_empty = true) {
  if (!j.contains(field)) schema_fail(field, line, "is missing");
  if (!j[field].is_string()) schema_fail(field, line, "must be a string");
  auto s = j[field].get<std::string>();
  if (non_empty && s.empty()) schema_fail(field, line, "must be non-empty");
  return s;
}

std::vector<std::string> req_strings(const json& j, const char* field, std::size_t line, std::size_t min_len) {
  if (!j.contains(field)) schema_fail(field, line, "is missing");
  if (!j[field].is_array()) schema_fail(field, line, "must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j[field]) {
    if (!v.is_string()) schema_fail(field, line, "must be an array of strings");
    out.push_back(v.get<std::string>());
  }
  if (out.size() < min_len) schema_fail(field, line, "needs at least " + std::to_string(min_len) + " entries");
  return out;
}

}  // namespace

EvalItem item_from_json(const json& j, TaskKind task, std::size_t line) {
  if (!j.is_object()) throw ParseError(line, "line " + std::to_string(line) + ": record is not a JSON object");
  EvalItem item;
  item.line = line;
  item.id = req_string(j, "id", line);
  switch (task) {
    case TaskKind::mcqa: {
      McqaPayload p;
      p.question = req_string(j, "question", line);
      if (j.contains("context") && !j["context"].is_null()) p.context = req_string(j, "context", line, false);
      p.options = req_strings(j, "options", line, 2);
      if (!j.contains("answer_index")) schema_fail("answer_index", line, "is missing");
      const auto& a = j["answer_index"];
      if (!a.is_number_integer()) schema_fail("answer_index", line, "must be an integer");
      auto idx = a.get<std::int64_t>();
      if (idx < 0 || static_cast<std::size_t>(idx) >= p.options.size()) {
        schema_fail("answer_index", line, "must lie in [0, " + std::to_string(p.options.size()) + ")");
      }
      p.answer_index = static_cast<std::size_t>(idx);
      item.payload = std::move(p);
      break;
    }
    case TaskKind::answer_gen: {
      AnswerGenPayload p;
      p.question = req_string(j, "question", line);
      p.reference_answers = req_strings(j, "reference_answers", line, 1);
      for (const auto& r : p.reference_answers) {
        if (r.empty()) schema_fail("reference_answers", line, "entries must be non-empty");
      }
      item.payload = std::move(p);
      break;
    }
    case TaskKind::summ_single:
      item.payload = SummSinglePayload{req_string(j, "document", line), req_string(j, "reference_summary", line)};
      break;
    case TaskKind::summ_multi:
      item.payload =
          SummMultiPayload{req_strings(j, "documents", line, 1), req_string(j, "reference_summary", line)};
      break;
    case TaskKind::simplify:
      item.payload = SimplifyPayload{req_string(j, "source", line), req_string(j, "reference", line)};
      break;
    case TaskKind::translate:
      item.payload = TranslatePayload{req_string(j, "source", line), req_string(j, "reference", line),
                                      req_string(j, "src_lang", line), req_string(j, "tgt_lang", line)};
      break;
  }
  return item;
}

json item_to_json(const EvalItem& item) {
  json j = {{"id", item.id}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, McqaPayload>) {
          j["question"] = p.question;
          if (p.context) j["context"] = *p.context;
          j["options"] = p.options;
          j["answer_index"] = p.answer_index;
        } else if constexpr (std::is_same_v<P, AnswerGenPayload>) {
          j["question"] = p.question;
          j["reference_answers"] = p.reference_answers;
        } else if constexpr (std::is_same_v<P, SummSinglePayload>) {
          j["document"] = p.document;
          j["reference_summary"] = p.reference_summary;
        } else if constexpr (std::is_same_v<P, SummMultiPayload>) {
          j["documents"] = p.documents;
          j["reference_summary"] = p.reference_summary;
        } else if constexpr (std::is_same_v<P, SimplifyPayload>) {
          j["source"] = p.source;
          j["reference"] = p.reference;
        } else {
          j["source"] = p.source;
          j["reference"] = p.reference;
          j["src_lang"] = p.src_lang;
          j["tgt_lang"] = p.tgt_lang;
        }
      },
      item.payload);
  return j;
}

std::vector<EvalItem> load_dataset(std::istream& in, TaskKind task) {
  std::vector<EvalItem> items;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, "line " + std::to_string(lineno) + ": malformed JSON (" + e.what() + ")");
    }
    auto item = item_from_json(j, task, lineno);
    if (!ids.insert(item.id).second) {
      throw DuplicateError(item.id, lineno, "line " + std::to_string(lineno) + ": duplicate id '" + item.id + "'");
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<EvalItem> load_dataset(const fs::path& path, TaskKind task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset " + path.string());
  return load_dataset(in, task);
}

// ---------------------------------------------------------------------------
// Report serialization

json report_to_json(const EvalReport& r) {
  json items = json::array();
  for (const auto& it : r.items) {
    json j = {{"id", it.id}, {"scores", it.scores}};
    if (it.output) j["output"] = *it.output;
    if (it.predicted_index) j["predicted_index"] = *it.predicted_index;
    if (!it.selected_sentences.empty()) j["selected_sentences"] = it.selected_sentences;
    if (!it.inputs.empty()) j["inputs"] = it.inputs;
    if (it.error) j["error"] = *it.error;
    items.push_back(std::move(j));
  }
  return {{"task", task_kind_name(r.task)}, {"dataset", r.dataset},     {"model_id", r.model_id},
          {"n_items", r.n_items},           {"completed", r.completed}, {"failed", r.failed},
          {"metrics", r.metrics},           {"items", items},           {"config", r.config},
          {"seed", r.seed},                 {"warnings", r.warnings}};
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.task = parse_task_kind(j.at("task").get<std::string>());
    r.dataset = j.at("dataset").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.n_items = j.at("n_items").get<std::size_t>();
    r.completed = j.at("completed").get<std::size_t>();
    r.failed = j.at("failed").get<std::size_t>();
    r.metrics = j.at("metrics").get<std::map<std::string, double>>();
    r.config = j.at("config");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& ij : j.at("items")) {
      ItemRecord it;
      it.id = ij.at("id").get<std::string>();
      it.scores = ij.at("scores").get<std::map<std::string, double>>();
      if (ij.contains("output")) it.output = ij["output"].get<std::string>();
      if (ij.contains("predicted_index")) it.predicted_index = ij["predicted_index"].get<std::size_t>();
      if (ij.contains("selected_sentences")) it.selected_sentences = ij["selected_sentences"].get<std::vector<std::size_t>>();
      if (ij.contains("inputs")) it.inputs = ij["inputs"];
      if (ij.contains("error")) it.error = ij["error"].get<std::string>();
      r.items.push_back(std::move(it));
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("not a well-formed eval report: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(0, std::string("not a well-formed eval report: ") + e.what());
  }
}

std::string serialize(const EvalReport& r) { return report_to_json(r).dump(2) + "\n"; }

EvalReport read_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read report " + path.string());
  try {
    return report_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(0, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Aggregation shared by the runners and check_consistency

namespace {

constexpr std::size_t kBleuOrder = 4;

const std::vector<std::string>& rouge_keys() {
  static const std::vector<std::string> k = {"rouge1_p", "rouge1_r", "rouge1_f", "rouge2_p", "rouge2_r",
                                             "rouge2_f", "rougeL_p", "rougeL_r", "rougeL_f"};
  return k;
}

std::vector<std::string> averaged_keys(TaskKind t) {
  switch (t) {
    case TaskKind::mcqa: return {"correct"};
    case TaskKind::simplify: {
      auto k = rouge_keys();
      k.insert(k.end(), {"fkgl_source", "fkgl_generated", "fkgl_reference"});
      return k;
    }
    case TaskKind::translate: return {};
    default: return rouge_keys();
  }
}

// Mean of one per-item score over completed items, summed in record order.
std::optional<double> mean_of(const std::vector<ItemRecord>& items, const std::string& key) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& it : items) {
    if (it.failed()) continue;
    sum += it.scores.at(key);
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

metrics::BleuStats pooled_bleu(const std::vector<ItemRecord>& items) {
  metrics::BleuStats total(kBleuOrder);
  for (const auto& it : items) {
    if (it.failed()) continue;
    metrics::BleuStats st(kBleuOrder);
    for (std::size_t n = 1; n <= kBleuOrder; ++n) {
      st.matches[n - 1] = static_cast<std::size_t>(it.scores.at("bleu_match_" + std::to_string(n)));
      st.totals[n - 1] = static_cast<std::size_t>(it.scores.at("bleu_total_" + std::to_string(n)));
    }
    st.candidate_len = static_cast<std::size_t>(it.scores.at("candidate_len"));
    st.reference_len = static_cast<std::size_t>(it.scores.at("reference_len"));
    total += st;
  }
  return total;
}

std::map<std::string, double> aggregate(TaskKind task, const std::vector<ItemRecord>& items) {
  std::map<std::string, double> m;
  std::size_t completed = 0;
  for (const auto& it : items) completed += it.failed() ? 0 : 1;
  if (completed == 0) return m;

  if (task == TaskKind::mcqa) {
    std::vector<std::size_t> pred, gold;
    for (const auto& it : items) {
      if (it.failed()) continue;
      pred.push_back(*it.predicted_index);
      gold.push_back(static_cast<std::size_t>(it.scores.at("answer_index")));
    }
    m["accuracy"] = metrics::accuracy(pred, gold);
    return m;
  }
  if (task == TaskKind::translate) {
    auto b = metrics::bleu_from_stats(pooled_bleu(items));
    m["bleu"] = b.bleu;
    m["brevity_penalty"] = b.brevity_penalty;
    for (std::size_t n = 0; n < b.precisions.size(); ++n) m["bleu_p" + std::to_string(n + 1)] = b.precisions[n];
    return m;
  }
  for (const auto& key : averaged_keys(task)) m[key] = *mean_of(items, key);
  if (task == TaskKind::simplify) {
    m["fkgl_delta_vs_source"] = m["fkgl_generated"] - m["fkgl_source"];
    m["fkgl_delta_vs_reference"] = m["fkgl_generated"] - m["fkgl_reference"];
  }
  return m;
}

void put_rouge(ItemRecord& rec, const text::TokenSeq& cand, const std::vector<text::TokenSeq>& refs) {
  auto r1 = metrics::rouge_n(cand, refs, 1);
  auto r2 = metrics::rouge_n(cand, refs, 2);
  auto rl = metrics::rouge_l(cand, refs);
  rec.scores["rouge1_p"] = r1.precision;
  rec.scores["rouge1_r"] = r1.recall;
  rec.scores["rouge1_f"] = r1.f1;
  rec.scores["rouge2_p"] = r2.precision;
  rec.scores["rouge2_r"] = r2.recall;
  rec.scores["rouge2_f"] = r2.f1;
  rec.scores["rougeL_p"] = rl.precision;
  rec.scores["rougeL_r"] = rl.recall;
  rec.scores["rougeL_f"] = rl.f1;
}

std::string fill(std::string_view templ, std::string_view slot, std::string_view value) {
  std::string out(templ);
  auto pos = out.find(slot);
  if (pos != std::string::npos) out.replace(pos, slot.size(), value);
  return out;
}

template <typename Fn>
std::vector<ItemRecord> run_items(const std::vector<EvalItem>& items, std::size_t parallelism, Fn&& per_item) {
  std::vector<ItemRecord> out(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) {
      ItemRecord rec;
      rec.id = items[i].id;
      try {
        per_item(items[i], rec);
      } catch (const std::exception& e) {
        rec.output.reset();
        rec.predicted_index.reset();
        rec.scores.clear();
        rec.selected_sentences.clear();
        rec.error = e.what();
      }
      out[i] = std::move(rec);
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(parallelism, items.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  std::sort(out.begin(), out.end(), [](const ItemRecord& a, const ItemRecord& b) { return a.id < b.id; });
  return out;
}

template <typename P>
const P& payload_as(const EvalItem& item, TaskKind expected) {
  if (auto* p = std::get_if<P>(&item.payload)) return *p;
  throw InvalidArgument("item '" + item.id + "' is not a " + std::string(task_kind_name(expected)) + " item");
}

// Mismatched payloads are a caller error, not an item failure.
template <typename P>
void require_payloads(const std::vector<EvalItem>& items, TaskKind expected) {
  for (const auto& item : items) payload_as<P>(item, expected);
}

EvalReport finish(TaskKind task, std::vector<ItemRecord> records, std::string model_id, const RunOptions& opts,
                  json config) {
  EvalReport r;
  r.task = task;
  r.dataset = opts.dataset_id;
  r.model_id = std::move(model_id);
  r.n_items = records.size();
  for (const auto& it : records) (it.failed() ? r.failed : r.completed)++;
  r.items = std::move(records);
  r.metrics = aggregate(task, r.items);
  config["prompt_version"] = kPromptVersion;
  config["parallelism"] = opts.parallelism;
  r.config = std::move(config);
  r.seed = opts.seed;
  if (r.failed > 0) {
    r.warnings.push_back(std::to_string(r.failed) + " of " + std::to_string(r.n_items) +
                         " items failed; aggregates cover completed items only");
  }
  if (r.completed == 0 && r.n_items > 0) r.warnings.push_back("no completed items; metrics omitted");
  return r;
}

backends::GenerationRequest make_request(backends::Task task, std::string prompt, const RunOptions& opts) {
  backends::GenerationRequest req;
  req.task = task;
  req.prompt = std::move(prompt);
  req.max_new_tokens = opts.max_new_tokens;
  req.temperature = opts.temperature;
  return req;
}

json generation_config(std::string_view templ, const RunOptions& opts) {
  return {{"prompt_template", templ}, {"max_new_tokens", opts.max_new_tokens}, {"temperature", opts.temperature}};
}

}  // namespace

std::optional<std::string> check_consistency(const EvalReport& r) {
  std::size_t completed = 0, failed = 0;
  for (const auto& it : r.items) (it.failed() ? failed : completed)++;
  if (r.n_items != r.items.size()) return "n_items does not match the number of item records";
  if (r.completed != completed || r.failed != failed) return "completed/failed counts do not match item records";
  for (std::size_t i = 1; i < r.items.size(); ++i) {
    if (!(r.items[i - 1].id < r.items[i].id)) return "item records are not sorted by unique id";
  }
  std::map<std::string, double> recomputed;
  try {
    recomputed = aggregate(r.task, r.items);
  } catch (const std::exception& e) {
    return std::string("per-item records incomplete: ") + e.what();
  }
  for (const auto& [key, value] : recomputed) {
    auto it = r.metrics.find(key);
    if (it == r.metrics.end()) return "metric '" + key + "' missing from report";
    if (it->second != value) return "metric '" + key + "' differs from recomputation";
  }
  for (const auto& [key, value] : r.metrics) {
    if (!recomputed.count(key)) return "metric '" + key + "' cannot be recomputed from item records";
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Runners

EvalReport run_mcqa(const std::vector<EvalItem>& items, backends::GenerationBackend& backend, const RunOptions& opts) {
  require_payloads<McqaPayload>(items, TaskKind::mcqa);
  auto records = run_items(items, opts.parallelism, [&](const EvalItem& item, ItemRecord& rec) {
    const auto& p = payload_as<McqaPayload>(item, TaskKind::mcqa);
    backends::OptionScoreRequest req{p.question, p.context, p.options};
    auto scores = backend.score_options(req);
    if (scores.size() != p.options.size()) throw ProtocolError("backend returned the wrong number of option scores");
    rec.predicted_index = backends::argmax(scores);
    rec.scores["answer_index"] = static_cast<double>(p.answer_index);
    rec.scores["correct"] = *rec.predicted_index == p.answer_index ? 1.0 : 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) rec.scores["option_" + std::to_string(i)] = scores[i];
    rec.inputs["question"] = p.question;
  });
  return finish(TaskKind::mcqa, std::move(records), backend.model_id(), opts, json{{"method", "score_options argmax"}});
}

EvalReport run_answer_gen(const std::vector<EvalItem>& items, backends::GenerationBackend& backend,
                          const RunOptions& opts) {
  require_payloads<AnswerGenPayload>(items, TaskKind::answer_gen);
  auto records = run_items(items, opts.parallelism, [&](const EvalItem& item, ItemRecord& rec) {
    const auto& p = payload_as<AnswerGenPayload>(item, TaskKind::answer_gen);
    auto resp = backend.generate(make_request(backends::Task::qa, fill(kAnswerPrompt, "{question}", p.question), opts));
    std::vector<text::TokenSeq> refs;
    for (const auto& r : p.reference_answers) refs.push_back(text::tokenize(r));
    put_rouge(rec, text::tokenize(resp.text), refs);
    rec.output = resp.text;
    rec.inputs["question"] = p.question;
    rec.inputs["reference"] = p.reference_answers.front();
  });
  return finish(TaskKind::answer_gen, std::move(records), backend.model_id(), opts,
                generation_config(kAnswerPrompt, opts));
}

EvalReport run_summarization(const std::vector<EvalItem>& items, const SummarizationEngine& engine, SummaryMode mode,
                             const RunOptions& opts) {
  const TaskKind task = mode == SummaryMode::single ? TaskKind::summ_single : TaskKind::summ_multi;
  auto* backend = std::get_if<backends::GenerationBackend*>(&engine);
  auto* textrank = std::get_if<TextRankEngine>(&engine);
  if (mode == SummaryMode::single) require_payloads<SummSinglePayload>(items, task);
  else require_payloads<SummMultiPayload>(items, task);
  if (backend && !*backend) throw InvalidArgument("run_summarization: null backend");

  auto records = run_items(items, opts.parallelism, [&](const EvalItem& item, ItemRecord& rec) {
    std::string document, reference;
    if (mode == SummaryMode::single) {
      const auto& p = payload_as<SummSinglePayload>(item, task);
      document = p.document;
      reference = p.reference_summary;
    } else {
      const auto& p = payload_as<SummMultiPayload>(item, task);
      for (std::size_t i = 0; i < p.documents.size(); ++i) {
        if (i) document += "\n\n";
        document += p.documents[i];
      }
      reference = p.reference_summary;
    }
    std::string generated;
    if (textrank) {
      auto s = summarizer::extract_summary(document, textrank->k, textrank->config);
      generated = std::move(s.text);
      rec.selected_sentences = std::move(s.selected);
    } else {
      generated =
          (*backend)->generate(make_request(backends::Task::summarize, fill(kSummarizePrompt, "{document}", document), opts)).text;
    }
    put_rouge(rec, text::tokenize(generated), {text::tokenize(reference)});
    rec.output = std::move(generated);
  });

  json config = {{"mode", mode == SummaryMode::single ? "single" : "multi"}, {"document_separator", "\n\n"}};
  std::string model_id;
  if (textrank) {
    model_id = "textrank";
    config["engine"] = "textrank";
    config["k"] = textrank->k;
    config["damping"] = textrank->config.damping;
    config["tolerance"] = textrank->config.tolerance;
    config["max_iterations"] = textrank->config.max_iterations;
  } else {
    model_id = (*backend)->model_id();
    config.update(generation_config(kSummarizePrompt, opts));
    config["engine"] = "backend";
  }
  return finish(task, std::move(records), model_id, opts, std::move(config));
}

EvalReport run_simplification(const std::vector<EvalItem>& items, backends::GenerationBackend& backend,
                              const RunOptions& opts) {
  require_payloads<SimplifyPayload>(items, TaskKind::simplify);
  auto records = run_items(items, opts.parallelism, [&](const EvalItem& item, ItemRecord& rec) {
    const auto& p = payload_as<SimplifyPayload>(item, TaskKind::simplify);
    auto resp =
        backend.generate(make_request(backends::Task::simplify, fill(kSimplifyPrompt, "{source}", p.source), opts));
    put_rouge(rec, text::tokenize(resp.text), {text::tokenize(p.reference)});
    rec.scores["fkgl_source"] = metrics::fkgl(p.source).fkgl;
    rec.scores["fkgl_generated"] = metrics::fkgl(resp.text).fkgl;
    rec.scores["fkgl_reference"] = metrics::fkgl(p.reference).fkgl;
    rec.output = resp.text;
  });
  return finish(TaskKind::simplify, std::move(records), backend.model_id(), opts,
                generation_config(kSimplifyPrompt, opts));
}

EvalReport run_translation(const std::vector<EvalItem>& items, backends::GenerationBackend& backend,
                           const RunOptions& opts) {
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& item : items) {
    const auto& p = payload_as<TranslatePayload>(item, TaskKind::translate);
    pairs.emplace(p.src_lang, p.tgt_lang);
  }
  if (pairs.size() > 1) {
    throw InvalidArgument("translation run mixes " + std::to_string(pairs.size()) +
                          " language pairs; run one (src_lang, tgt_lang) pair at a time");
  }

  auto records = run_items(items, opts.parallelism, [&](const EvalItem& item, ItemRecord& rec) {
    const auto& p = std::get<TranslatePayload>(item.payload);
    auto req = make_request(backends::Task::translate, fill(kTranslatePrompt, "{source}", p.source), opts);
    req.target_language = p.tgt_lang;
    auto resp = backend.generate(req);
    auto st = metrics::sentence_bleu_stats(text::tokenize(resp.text), text::tokenize(p.reference), kBleuOrder);
    for (std::size_t n = 1; n <= kBleuOrder; ++n) {
      rec.scores["bleu_match_" + std::to_string(n)] = static_cast<double>(st.matches[n - 1]);
      rec.scores["bleu_total_" + std::to_string(n)] = static_cast<double>(st.totals[n - 1]);
    }
    rec.scores["candidate_len"] = static_cast<double>(st.candidate_len);
    rec.scores["reference_len"] = static_cast<double>(st.reference_len);
    rec.output = resp.text;
  });

  json config = generation_config(kTranslatePrompt, opts);
  config["max_order"] = kBleuOrder;
  config["smoothing_epsilon"] = metrics::kBleuSmoothingEpsilon;
  if (!pairs.empty()) {
    config["src_lang"] = pairs.begin()->first;
    config["tgt_lang"] = pairs.begin()->second;
  }
  return finish(TaskKind::translate, std::move(records), backend.model_id(), opts, std::move(config));
}

double delta_bleu(const EvalReport& candidate, const EvalReport& baseline) {
  if (candidate.task != TaskKind::translate || baseline.task != TaskKind::translate) {
    throw InvalidArgument("delta_bleu compares two translation reports");
  }
  auto a = candidate.metrics.find("bleu");
  auto b = baseline.metrics.find("bleu");
  if (a == candidate.metrics.end() || b == baseline.metrics.end()) {
    throw InvalidArgument("delta_bleu: a report has no BLEU (no completed items)");
  }
  return a->second - b->second;
}

}  // namespace clinitext::harness
