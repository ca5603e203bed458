#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "clinitext/backends.hpp"
#include "clinitext/corpus_store.hpp"
#include "clinitext/errors.hpp"
#include "clinitext/harness.hpp"
#include "clinitext/metrics.hpp"
#include "clinitext/review_server.hpp"
#include "clinitext/review_service.hpp"
#include "clinitext/summarizer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace clinitext;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

// Misconfiguration detected after argument parsing; exits like a parse error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::string all = read_file(p);
  std::vector<std::string> lines;
  std::istringstream in(all);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

template <typename T>
std::vector<T> read_numbers(const fs::path& p) {
  std::vector<T> out;
  std::size_t n = 0;
  for (const auto& line : read_lines(p)) {
    ++n;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream in(line);
    long long v;
    std::string rest;
    if (!(in >> v) || (in >> rest) || v < 0) {
      throw ParseError(n, p.string() + ":" + std::to_string(n) + ": expected a non-negative integer");
    }
    out.push_back(static_cast<T>(v));
  }
  return out;
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << content)) throw IoError("cannot write " + p.string());
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

// ROUGE and BLEU read as percentages in the human format.
bool shown_as_percent(const std::string& key) {
  return key.rfind("rouge", 0) == 0 || key == "bleu" || key.rfind("bleu_p", 0) == 0 || key == "delta_bleu";
}

// Settings that may come from flags, the environment or a JSON config file.
struct Settings {
  std::string format = "human";
  std::string config_path;
  json config = json::object();

  std::string backend_spec;
  std::string backend_url;
  std::optional<double> timeout_s;
  std::optional<std::size_t> parallelism;
  std::optional<std::uint64_t> seed;

  bool structured() const { return format == "structured"; }

  void load_config() {
    if (config_path.empty()) return;
    try {
      config = json::parse(read_file(config_path));
    } catch (const json::exception& e) {
      throw ParseError(0, "config " + config_path + " is not valid JSON: " + e.what());
    }
    if (!config.is_object()) throw ParseError(0, "config " + config_path + " must be a JSON object");
  }

  std::optional<std::string> env(const char* name) const {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  }

  std::optional<std::string> from_config(const char* key) const {
    if (!config.contains(key)) return std::nullopt;
    const auto& v = config[key];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return v.dump();
    throw ParseError(0, std::string("config field '") + key + "' must be a string or number");
  }

  // Flag, then environment, then config file.
  std::optional<std::string> layered(const std::optional<std::string>& flag, const char* env_name,
                                     const char* config_key) const {
    if (flag) return flag;
    if (auto e = env(env_name)) return e;
    return from_config(config_key);
  }

  double timeout() const {
    auto v = layered(timeout_s ? std::optional(std::to_string(*timeout_s)) : std::nullopt, "CLINITEXT_TIMEOUT",
                     "timeout");
    double t = v ? std::stod(*v) : 30.0;
    if (!(t > 0)) throw UsageError("timeout must be positive");
    return t;
  }

  std::size_t workers() const {
    auto v = layered(parallelism ? std::optional(std::to_string(*parallelism)) : std::nullopt,
                     "CLINITEXT_PARALLELISM", "parallelism");
    auto n = v ? std::stoull(*v) : 4ull;
    if (n == 0) throw UsageError("parallelism must be >= 1");
    return static_cast<std::size_t>(n);
  }

  std::uint64_t rng_seed() const {
    auto v = layered(seed ? std::optional(std::to_string(*seed)) : std::nullopt, "CLINITEXT_SEED", "seed");
    return v ? std::stoull(*v) : 0;
  }

  std::string auth_token() const {
    if (auto e = env("CLINITEXT_AUTH_TOKEN")) return *e;
    return from_config("auth_token").value_or("");
  }
};

struct BackendChoice {
  std::unique_ptr<backends::GenerationBackend> backend;
  bool textrank = false;
};

BackendChoice make_backend(const Settings& s, const std::string& spec, const std::string& url, bool allow_textrank,
                           bool use_env_and_config = true) {
  if (!spec.empty() && !url.empty()) throw UsageError("give either a stub backend or a backend URL, not both");
  std::string chosen_spec = spec, chosen_url = url;
  if (chosen_spec.empty() && chosen_url.empty() && use_env_and_config) {
    if (auto e = s.env("CLINITEXT_BACKEND_URL")) chosen_url = *e;
    else if (auto c = s.from_config("backend_url")) chosen_url = *c;
    else if (auto b = s.from_config("backend")) chosen_spec = *b;
  }
  BackendChoice out;
  if (!chosen_url.empty()) {
    backends::HttpBackendConfig cfg;
    cfg.base_url = chosen_url;
    cfg.auth_token = s.auth_token();
    cfg.timeout = std::chrono::milliseconds(static_cast<long long>(s.timeout() * 1000));
    out.backend = std::make_unique<backends::HttpBackend>(cfg);
    return out;
  }
  if (chosen_spec == "textrank") {
    if (!allow_textrank) throw UsageError("textrank only applies to summarization");
    out.textrank = true;
    return out;
  }
  if (chosen_spec.empty()) {
    if (allow_textrank) {
      out.textrank = true;
      return out;
    }
    throw UsageError(
        "no backend configured: pass --backend stub:<name> or --backend-url, or set CLINITEXT_BACKEND_URL");
  }
  out.backend = backends::make_stub(chosen_spec);
  return out;
}

void require_healthy(backends::GenerationBackend& b) {
  auto h = b.health_check();
  if (!h.ok) throw BackendError(0, "", "backend unreachable: " + h.reason);
}

void print_json(const json& j) { std::cout << j.dump(2) << "\n"; }

void print_report_human(const harness::EvalReport& r) {
  std::cout << "task       " << harness::task_kind_name(r.task) << "\n"
            << "model      " << r.model_id << "\n"
            << "items      " << r.n_items << " (" << r.completed << " completed, " << r.failed << " failed)\n";
  for (const auto& [k, v] : r.metrics) {
    std::cout << "  " << k << std::string(k.size() < 24 ? 24 - k.size() : 1, ' ')
              << (shown_as_percent(k) ? fmt(v * 100, 2) : fmt(v)) << "\n";
  }
  for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
}

void print_note(const corpus::NoteRecord& n) {
  std::cout << "row_id " << n.row_id << "  subject_id " << n.subject_id << "  hadm_id "
            << (n.hadm_id ? std::to_string(*n.hadm_id) : "-") << "  category " << n.category << "\n"
            << n.text << "\n";
}

json note_json(const corpus::NoteRecord& n) {
  return {{"row_id", n.row_id},
          {"subject_id", n.subject_id},
          {"hadm_id", n.hadm_id ? json(*n.hadm_id) : json(nullptr)},
          {"category", n.category},
          {"text", n.text}};
}

json stats_json(const corpus::CorpusStats& s) {
  return {{"patients", s.patients}, {"documents", s.documents}, {"sentences", s.sentences}};
}

void print_stats(const Settings& s, const corpus::CorpusStats& st) {
  if (s.structured()) return print_json(stats_json(st));
  std::cout << "patients   " << st.patients << "\ndocuments  " << st.documents << "\nsentences  " << st.sentences
            << "\n";
}

harness::TaskKind eval_task(const std::string& name) {
  if (name == "answer-gen") return harness::TaskKind::answer_gen;
  if (name == "summ-single") return harness::TaskKind::summ_single;
  if (name == "summ-multi") return harness::TaskKind::summ_multi;
  return harness::parse_task_kind(name);
}

struct EvalArgs {
  std::string task;
  std::string dataset;
  std::string backend_spec, backend_url;
  std::string baseline_spec, baseline_url;
  std::string out;
  std::size_t k = 3;
  std::optional<std::size_t> max_new_tokens;
};

int run_eval(const Settings& s, const EvalArgs& a) {
  const auto task = eval_task(a.task);
  const bool summarization = task == harness::TaskKind::summ_single || task == harness::TaskKind::summ_multi;
  auto items = harness::load_dataset(fs::path(a.dataset), task);
  auto choice = make_backend(s, a.backend_spec.empty() ? s.backend_spec : a.backend_spec,
                             a.backend_url.empty() ? s.backend_url : a.backend_url, summarization);
  if (choice.backend) require_healthy(*choice.backend);

  harness::RunOptions opts;
  opts.parallelism = s.workers();
  opts.seed = s.rng_seed();
  opts.dataset_id = fs::path(a.dataset).filename().string();
  if (a.max_new_tokens) opts.max_new_tokens = *a.max_new_tokens;

  harness::EvalReport report;
  std::optional<json> comparison;
  switch (task) {
    case harness::TaskKind::mcqa: report = harness::run_mcqa(items, *choice.backend, opts); break;
    case harness::TaskKind::answer_gen: report = harness::run_answer_gen(items, *choice.backend, opts); break;
    case harness::TaskKind::summ_single:
    case harness::TaskKind::summ_multi: {
      auto mode = task == harness::TaskKind::summ_single ? harness::SummaryMode::single : harness::SummaryMode::multi;
      harness::SummarizationEngine engine = harness::TextRankEngine{a.k};
      if (!choice.textrank) engine = choice.backend.get();
      report = harness::run_summarization(items, engine, mode, opts);
      break;
    }
    case harness::TaskKind::simplify: report = harness::run_simplification(items, *choice.backend, opts); break;
    case harness::TaskKind::translate: {
      report = harness::run_translation(items, *choice.backend, opts);
      if (!a.baseline_spec.empty() || !a.baseline_url.empty()) {
        auto base = make_backend(s, a.baseline_spec, a.baseline_url, false, false);
        require_healthy(*base.backend);
        auto baseline = harness::run_translation(items, *base.backend, opts);
        comparison = json{{"baseline_model_id", baseline.model_id},
                          {"baseline_bleu", baseline.metrics.at("bleu")},
                          {"delta_bleu", harness::delta_bleu(report, baseline)}};
      }
      break;
    }
  }

  // Comparison fields ride alongside the report so the document stays readable as one.
  json doc = harness::report_to_json(report);
  if (comparison) doc["comparison"] = *comparison;
  const std::string serialized = comparison ? doc.dump(2) + "\n" : harness::serialize(report);
  if (!a.out.empty()) write_file(a.out, serialized);
  if (s.structured()) {
    std::cout << serialized;
  } else {
    print_report_human(report);
    if (comparison) {
      std::cout << "baseline   " << (*comparison)["baseline_model_id"].get<std::string>() << "\n"
                << "  delta_bleu              " << fmt((*comparison)["delta_bleu"].get<double>() * 100, 2) << "\n";
    }
    if (!a.out.empty()) std::cout << "report written to " << a.out << "\n";
  }
  return report.failed == report.n_items && report.n_items > 0 ? kExitError : kExitOk;
}

struct MetricArgs {
  std::string name;
  std::string candidates, references, input, text, predictions, gold, a, b;
  int threshold = metrics::kDefaultBinarizationThreshold;
};

void need(const std::string& v, const char* flag, const std::string& metric) {
  if (v.empty()) throw UsageError("metric " + metric + " needs " + flag);
}

int run_metric(const Settings& s, const MetricArgs& m) {
  json out;
  std::vector<std::pair<std::string, double>> rows;
  if (m.name == "rouge" || m.name == "bleu") {
    need(m.candidates, "--candidates", m.name);
    need(m.references, "--references", m.name);
    auto cands = read_lines(m.candidates), refs = read_lines(m.references);
    if (cands.size() != refs.size()) {
      throw InvalidArgument("candidates have " + std::to_string(cands.size()) + " lines but references have " +
                            std::to_string(refs.size()));
    }
    if (cands.empty()) throw InvalidArgument("no candidate lines");
    std::vector<text::TokenSeq> ct, rt;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      ct.push_back(text::tokenize(cands[i]));
      rt.push_back(text::tokenize(refs[i]));
    }
    if (m.name == "rouge") {
      struct Acc {
        const char* key;
        double p = 0, r = 0, f = 0;
      } acc[3] = {{"rouge1"}, {"rouge2"}, {"rougeL"}};
      for (std::size_t i = 0; i < ct.size(); ++i) {
        std::vector<text::TokenSeq> one{rt[i]};
        metrics::RougeScore sc[3] = {metrics::rouge_n(ct[i], one, 1), metrics::rouge_n(ct[i], one, 2),
                                     metrics::rouge_l(ct[i], one)};
        for (int k = 0; k < 3; ++k) {
          acc[k].p += sc[k].precision;
          acc[k].r += sc[k].recall;
          acc[k].f += sc[k].f1;
        }
      }
      const double n = static_cast<double>(ct.size());
      for (auto& x : acc) {
        std::string k = x.key;
        rows.emplace_back(k + "_p", x.p / n);
        rows.emplace_back(k + "_r", x.r / n);
        rows.emplace_back(k + "_f", x.f / n);
      }
    } else {
      auto b = metrics::corpus_bleu(ct, rt);
      rows.emplace_back("bleu", b.bleu);
      rows.emplace_back("brevity_penalty", b.brevity_penalty);
      for (std::size_t i = 0; i < b.precisions.size(); ++i) rows.emplace_back("bleu_p" + std::to_string(i + 1), b.precisions[i]);
      rows.emplace_back("candidate_len", static_cast<double>(b.candidate_len));
      rows.emplace_back("reference_len", static_cast<double>(b.reference_len));
    }
  } else if (m.name == "fkgl") {
    if (m.input.empty() && m.text.empty()) throw UsageError("metric fkgl needs --input or --text");
    auto r = metrics::fkgl(m.input.empty() ? m.text : read_file(m.input));
    rows = {{"fkgl", r.fkgl},
            {"words", static_cast<double>(r.words)},
            {"sentences", static_cast<double>(r.sentences)},
            {"syllables", static_cast<double>(r.syllables)}};
  } else if (m.name == "accuracy") {
    need(m.predictions, "--predictions", m.name);
    need(m.gold, "--gold", m.name);
    auto p = read_numbers<std::size_t>(m.predictions), g = read_numbers<std::size_t>(m.gold);
    rows = {{"accuracy", metrics::accuracy(p, g)}, {"n", static_cast<double>(p.size())}};
  } else if (m.name == "agreement") {
    need(m.a, "--a", m.name);
    need(m.b, "--b", m.name);
    auto a = read_numbers<int>(m.a), b = read_numbers<int>(m.b);
    rows = {{"agreement", metrics::percentage_agreement(a, b, m.threshold)},
            {"n_items", static_cast<double>(a.size())},
            {"binarization_threshold", static_cast<double>(m.threshold)}};
  } else {
    throw UsageError("unknown metric '" + m.name + "' (rouge, bleu, fkgl, accuracy, agreement)");
  }

  if (s.structured()) {
    out = json::object();
    for (const auto& [k, v] : rows) out[k] = v;
    out["metric"] = m.name;
    print_json(out);
  } else {
    for (const auto& [k, v] : rows) {
      bool count = k == "words" || k == "sentences" || k == "syllables" || k == "n" || k == "n_items" ||
                   k == "candidate_len" || k == "reference_len" || k == "binarization_threshold";
      std::cout << k << std::string(k.size() < 18 ? 18 - k.size() : 1, ' ')
                << (count ? std::to_string(static_cast<long long>(v)) : shown_as_percent(k) ? fmt(v * 100, 2) : fmt(v))
                << "\n";
    }
  }
  return kExitOk;
}

struct SplitArgs {
  std::string dataset, task, out_dir;
  double ratio = 0.85;
  std::optional<std::size_t> carve;
};

int run_split(const Settings& s, const SplitArgs& a) {
  if (!a.task.empty()) harness::load_dataset(fs::path(a.dataset), eval_task(a.task));  // schema check only
  std::vector<std::string> lines;
  for (auto& l : read_lines(a.dataset))
    if (l.find_first_not_of(" \t") != std::string::npos) lines.push_back(std::move(l));
  harness::SplitConfig cfg;
  cfg.ratio = a.ratio;
  cfg.seed = s.rng_seed();
  cfg.carve_validation = a.carve;
  auto r = harness::split(std::move(lines), cfg);

  auto join = [](const std::vector<std::string>& v) {
    std::string out;
    for (const auto& l : v) out += l + "\n";
    return out;
  };
  json summary = {{"seed", cfg.seed}, {"ratio", cfg.ratio}, {"train", r.train.size()}, {"test", r.test.size()}};
  summary["validation"] = r.validation ? json(r.validation->size()) : json(nullptr);
  if (!a.out_dir.empty()) {
    write_file(fs::path(a.out_dir) / "train.jsonl", join(r.train));
    write_file(fs::path(a.out_dir) / "test.jsonl", join(r.test));
    if (r.validation) write_file(fs::path(a.out_dir) / "validation.jsonl", join(*r.validation));
    summary["out_dir"] = a.out_dir;
  }
  if (s.structured()) {
    print_json(summary);
  } else {
    std::cout << "seed " << cfg.seed << "  train " << r.train.size() << "  test " << r.test.size();
    if (r.validation) std::cout << "  validation " << r.validation->size();
    std::cout << "\n";
  }
  return kExitOk;
}

void print_review_report(const Settings& s, const review::ReviewReport& r) {
  if (s.structured()) return print_json(review::report_to_json(r));
  std::cout << "ratings " << r.n_ratings << "  raters " << r.n_raters << "  items " << r.n_items << "\n";
  for (auto c : metrics::kCriteria) {
    auto i = static_cast<std::size_t>(c);
    std::string name(metrics::criterion_name(c));
    std::cout << "  " << name << std::string(14 - name.size(), ' ') << "mean " << fmt(r.means[i], 2);
    if (r.iaa) std::cout << "  agreement " << fmt((*r.iaa)[i], 2);
    std::cout << "\n";
  }
  if (r.iaa_omitted) std::cout << "agreement omitted: no co-rated items\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clinical text toolkit: metrics, summarization, corpus search, evaluation and review"};
  app.require_subcommand(1);
  Settings s;
  app.add_option("--format", s.format, "Output format")->check(CLI::IsMember({"human", "structured"}));
  app.add_option("--config", s.config_path, "JSON config file (backend_url, auth_token, timeout, parallelism, seed)");

  // corpus
  std::string tsv, index, query;
  std::size_t limit = 10;
  std::int64_t row_id = 0, subject_id = 0;
  std::optional<std::size_t> patient_limit;

  auto* ingest = app.add_subcommand("ingest", "Index a NOTEEVENTS-style TSV");
  ingest->add_option("--tsv", tsv, "Input TSV")->required();
  ingest->add_option("--index", index, "Index directory")->required();

  auto* stats = app.add_subcommand("stats", "Patient, document and sentence counts");
  stats->add_option("--index", index)->required();

  auto* search = app.add_subcommand("search", "Keyword search (all terms must match)");
  search->add_option("--index", index)->required();
  search->add_option("--query", query)->required();
  search->add_option("--limit", limit)->check(CLI::PositiveNumber);

  auto* get_note = app.add_subcommand("get-note", "Fetch one note by ROW_ID");
  get_note->add_option("--index", index)->required();
  get_note->add_option("--row-id", row_id)->required();

  auto* get_patient = app.add_subcommand("get-patient", "Fetch a patient's notes");
  get_patient->add_option("--index", index)->required();
  get_patient->add_option("--subject-id", subject_id)->required();
  get_patient->add_option("--limit", patient_limit);

  // summarize
  std::string sum_input, sum_text;
  std::optional<std::size_t> sum_k, sum_words;
  auto* summarize = app.add_subcommand("summarize", "Summarize a document");
  auto* src = summarize->add_option("--input", sum_input, "Document file");
  summarize->add_option("--text", sum_text, "Document text")->excludes(src);
  auto* kopt = summarize->add_option("--k", sum_k, "Sentences to keep (textrank)")->check(CLI::PositiveNumber);
  summarize->add_option("--words", sum_words, "Word budget (textrank)")->excludes(kopt);
  summarize->add_option("--backend", s.backend_spec, "textrank (default) or stub:<name>");
  summarize->add_option("--backend-url", s.backend_url, "Inference server base URL");
  summarize->add_option("--timeout", s.timeout_s, "Backend timeout in seconds");

  // eval
  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Run an evaluation pipeline");
  eval->add_option("task", ev.task, "mcqa, answer_gen, summ_single, summ_multi, simplify, translate")->required();
  eval->add_option("--dataset", ev.dataset, "Newline-delimited JSON dataset")->required();
  eval->add_option("--backend", ev.backend_spec, "stub:<name>, or textrank for summarization");
  eval->add_option("--backend-url", ev.backend_url, "Inference server base URL");
  eval->add_option("--baseline-backend", ev.baseline_spec, "translate: baseline stub for delta BLEU");
  eval->add_option("--baseline-backend-url", ev.baseline_url, "translate: baseline server for delta BLEU");
  eval->add_option("--k", ev.k, "TextRank sentences per summary")->check(CLI::PositiveNumber);
  eval->add_option("--max-new-tokens", ev.max_new_tokens)->check(CLI::PositiveNumber);
  eval->add_option("--out", ev.out, "Also write the structured report here");
  eval->add_option("--timeout", s.timeout_s, "Backend timeout in seconds");
  eval->add_option("--parallelism", s.parallelism, "Concurrent backend calls");
  eval->add_option("--seed", s.seed, "Seed recorded in the report");

  // metric
  MetricArgs mt;
  auto* metric = app.add_subcommand("metric", "Compute one metric from files");
  metric->add_option("name", mt.name, "rouge, bleu, fkgl, accuracy, agreement")->required();
  metric->add_option("--candidates", mt.candidates, "One candidate per line");
  metric->add_option("--references", mt.references, "One reference per line");
  metric->add_option("--input", mt.input, "fkgl: text file");
  metric->add_option("--text", mt.text, "fkgl: inline text");
  metric->add_option("--predictions", mt.predictions, "accuracy: predicted indices, one per line");
  metric->add_option("--gold", mt.gold, "accuracy: gold indices, one per line");
  metric->add_option("--a", mt.a, "agreement: rater A scores, one per line");
  metric->add_option("--b", mt.b, "agreement: rater B scores, one per line");
  metric->add_option("--threshold", mt.threshold, "agreement: scores >= threshold count as positive");

  // split
  SplitArgs sp;
  auto* split = app.add_subcommand("split", "Seeded train/test(/validation) split of a dataset");
  split->add_option("--dataset", sp.dataset)->required();
  split->add_option("--task", sp.task, "Validate records against this task schema first");
  split->add_option("--ratio", sp.ratio, "Train fraction");
  split->add_option("--carve-validation", sp.carve, "Items moved from train into validation");
  split->add_option("--out-dir", sp.out_dir, "Write train/test/validation.jsonl here");
  split->add_option("--seed", s.seed);

  // review
  auto* review = app.add_subcommand("review", "Manual rating workflow");
  review->require_subcommand(1);
  std::string items_path, log_path, report_path, out_path, rubric_path, ui_dir, host = "127.0.0.1";
  int port = 8080, threshold = metrics::kDefaultBinarizationThreshold;
  std::size_t sample_n = 50;
  bool hide_reference = false;

  auto* rsample = review->add_subcommand("sample", "Sample generated answers from an eval report");
  rsample->add_option("--report", report_path)->required();
  rsample->add_option("-n,--n", sample_n)->check(CLI::PositiveNumber);
  rsample->add_option("--out", out_path, "Items file (JSONL)")->required();
  rsample->add_option("--seed", s.seed);
  rsample->add_flag("--hide-reference", hide_reference, "Do not show the reference answer to raters");

  auto* rserve = review->add_subcommand("serve", "Serve the rating API (and optional UI)");
  rserve->add_option("--items", items_path)->required();
  rserve->add_option("--log", log_path, "Rating log")->required();
  rserve->add_option("--host", host);
  rserve->add_option("--port", port);
  rserve->add_option("--rubric", rubric_path, "Serve this file as the rubric");
  rserve->add_option("--ui-dir", ui_dir, "Static files served at /");
  rserve->add_option("--threshold", threshold);

  auto* rreport = review->add_subcommand("report", "Means and agreement from a rating log");
  rreport->add_option("--items", items_path, "Items file, for completion fractions");
  rreport->add_option("--log", log_path)->required();
  rreport->add_option("--threshold", threshold);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    s.load_config();
    if (*ingest) {
      auto st = corpus::ingest(tsv, index);
      print_stats(s, st);
    } else if (*stats) {
      print_stats(s, corpus::stats(index));
    } else if (*search) {
      auto hits = corpus::search(index, query, limit);
      if (s.structured()) {
        json arr = json::array();
        for (const auto& h : hits) arr.push_back({{"row_id", h.row_id}, {"score", h.score}});
        print_json({{"query", query}, {"hits", arr}});
      } else {
        if (hits.empty()) std::cout << "no matches\n";
        for (const auto& h : hits) std::cout << h.row_id << "\t" << fmt(h.score) << "\n";
      }
    } else if (*get_note) {
      auto n = corpus::get_note(index, row_id);
      if (s.structured()) print_json(note_json(n));
      else print_note(n);
    } else if (*get_patient) {
      auto notes = corpus::get_patient_notes(index, subject_id, patient_limit);
      if (s.structured()) {
        json arr = json::array();
        for (const auto& n : notes) arr.push_back(note_json(n));
        print_json({{"subject_id", subject_id}, {"notes", arr}});
      } else {
        if (notes.empty()) std::cout << "no notes for subject " << subject_id << "\n";
        for (std::size_t i = 0; i < notes.size(); ++i) {
          if (i) std::cout << "\n";
          print_note(notes[i]);
        }
      }
    } else if (*summarize) {
      if (sum_input.empty() && sum_text.empty()) throw UsageError("summarize needs --input or --text");
      const std::string doc = sum_input.empty() ? sum_text : read_file(sum_input);
      auto choice = make_backend(s, s.backend_spec, s.backend_url, true);
      json out;
      if (choice.textrank) {
        std::size_t k = sum_k.value_or(3);
        if (sum_words) k = summarizer::k_for_word_budget(doc, *sum_words);
        auto sm = summarizer::extract_summary(doc, k);
        out = {{"engine", "textrank"}, {"k", k}, {"summary", sm.text}, {"selected_sentences", sm.selected}};
      } else {
        if (sum_k || sum_words) throw UsageError("--k and --words apply to textrank only");
        require_healthy(*choice.backend);
        backends::GenerationRequest req;
        req.task = backends::Task::summarize;
        req.prompt = "summarize: " + doc;
        auto resp = choice.backend->generate(req);
        out = {{"engine", resp.model_id}, {"summary", resp.text}};
      }
      if (s.structured()) print_json(out);
      else std::cout << out["summary"].get<std::string>() << "\n";
    } else if (*eval) {
      return run_eval(s, ev);
    } else if (*metric) {
      return run_metric(s, mt);
    } else if (*split) {
      return run_split(s, sp);
    } else if (*rsample) {
      auto rep = harness::read_report(report_path);
      auto seed = s.rng_seed();
      auto items = review::sample_items(rep, sample_n, seed, !hide_reference);
      review::save_items(out_path, items);
      if (s.structured()) print_json({{"seed", seed}, {"n", items.size()}, {"out", out_path}});
      else std::cout << "sampled " << items.size() << " items (seed " << seed << ") to " << out_path << "\n";
    } else if (*rserve) {
      review::ReviewSession session(review::load_items(items_path), log_path);
      review::ServerOptions opts;
      if (!rubric_path.empty()) opts.rubric = read_file(rubric_path);
      if (!ui_dir.empty()) opts.ui_dir = ui_dir;
      opts.binarization_threshold = threshold;
      review::ReviewServer server(session, opts);
      int bound = server.bind(host, port);
      std::cout << "serving " << session.items().size() << " items on http://" << host << ":" << bound << "/api"
                << std::endl;
      server.listen();
    } else if (*rreport) {
      if (!fs::exists(log_path)) throw IoError("rating log " + log_path + " does not exist");
      std::size_t n_items = 0;
      if (!items_path.empty()) n_items = review::load_items(items_path).size();
      auto ratings = review::compact(review::RatingLog(log_path).read_all());
      print_review_report(s, review::build_report(ratings, n_items, threshold));
    }
    return kExitOk;
  } catch (const UsageError& e) {
    std::cerr << "clinitext: usage: " << one_line(e.what()) << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "clinitext: " << one_line(e.what()) << "\n";
    return kExitError;
  }
}
