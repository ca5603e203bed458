#include "clinitext/review_service.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <set>

#include "clinitext/errors.hpp"

namespace clinitext::review {

using nlohmann::json;
namespace fs = std::filesystem;
using metrics::Criterion;
using metrics::kCriteria;

json item_to_json(const ReviewItem& item) {
  json j = {{"item_id", item.item_id},
            {"question", item.question},
            {"generated_answer", item.generated_answer},
            {"show_reference", item.show_reference}};
  if (item.show_reference && item.reference_answer) j["reference_answer"] = *item.reference_answer;
  return j;
}

ReviewItem item_from_json(const json& j) {
  try {
    ReviewItem it;
    it.item_id = j.at("item_id").get<std::string>();
    it.question = j.at("question").get<std::string>();
    it.generated_answer = j.at("generated_answer").get<std::string>();
    if (j.contains("reference_answer") && !j["reference_answer"].is_null()) {
      it.reference_answer = j["reference_answer"].get<std::string>();
    }
    it.show_reference = j.value("show_reference", true);
    return it;
  } catch (const json::exception& e) {
    throw ParseError(0, std::string("malformed review item: ") + e.what());
  }
}

json rating_to_json(const RatingRecord& r) {
  json j = {{"item_id", r.item_id}, {"rater_id", r.rater_id}, {"submitted_at", r.submitted_at}};
  for (auto c : kCriteria) j[std::string(metrics::criterion_name(c))] = r.scores[c];
  return j;
}

RatingRecord rating_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("body", "rating must be a JSON object");
  auto str_field = [&](const char* name) {
    if (!j.contains(name) || !j[name].is_string() || j[name].get<std::string>().empty()) {
      throw ValidationError(name, std::string(name) + " must be a non-empty string");
    }
    return j[name].get<std::string>();
  };
  RatingRecord r;
  r.item_id = str_field("item_id");
  r.rater_id = str_field("rater_id");
  for (auto c : kCriteria) {
    std::string name(metrics::criterion_name(c));
    if (!j.contains(name) || !j[name].is_number_integer()) {
      throw ValidationError(name, name + " must be an integer 1..5");
    }
    auto v = j[name].get<std::int64_t>();
    r.scores[c] = static_cast<int>(std::clamp<std::int64_t>(v, -1000, 1000));
  }
  if (j.contains("submitted_at") && !j["submitted_at"].is_null()) {
    if (!j["submitted_at"].is_number_integer()) throw ValidationError("submitted_at", "submitted_at must be epoch ms");
    r.submitted_at = j["submitted_at"].get<std::int64_t>();
  }
  validate_scores(r.scores);
  return r;
}

json report_to_json(const ReviewReport& r) {
  json means = json::object();
  for (auto c : kCriteria) means[std::string(metrics::criterion_name(c))] = r.means[static_cast<std::size_t>(c)];
  json j = {{"means", means},
            {"iaa_omitted", r.iaa_omitted},
            {"rater_pairs", r.rater_pairs},
            {"n_items", r.n_items},
            {"n_raters", r.n_raters},
            {"n_ratings", r.n_ratings},
            {"completion", r.completion},
            {"binarization_threshold", r.binarization_threshold}};
  if (r.iaa) {
    json iaa = json::object();
    for (auto c : kCriteria) iaa[std::string(metrics::criterion_name(c))] = (*r.iaa)[static_cast<std::size_t>(c)];
    j["iaa"] = iaa;
  } else {
    j["iaa"] = nullptr;
  }
  return j;
}

void validate_scores(const metrics::LikertRating& scores) {
  for (auto c : kCriteria) {
    int v = scores[c];
    if (v < 1 || v > 5) {
      throw ValidationError(std::string(metrics::criterion_name(c)),
                            std::string(metrics::criterion_name(c)) + " score " + std::to_string(v) +
                                " outside 1..5");
    }
  }
}

std::vector<ReviewItem> sample_items(const harness::EvalReport& report, std::size_t n, std::uint64_t seed,
                                     bool show_reference) {
  std::vector<const harness::ItemRecord*> eligible;
  for (const auto& it : report.items) {
    if (!it.failed() && it.output && it.inputs.contains("question")) eligible.push_back(&it);
  }
  if (n > eligible.size()) {
    throw InvalidArgument("cannot sample " + std::to_string(n) + " items from " + std::to_string(eligible.size()) +
                          " completed generated answers");
  }
  std::sort(eligible.begin(), eligible.end(), [](auto* a, auto* b) { return a->id < b->id; });
  harness::seeded_shuffle(eligible, seed);
  eligible.resize(n);
  std::sort(eligible.begin(), eligible.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::vector<ReviewItem> out;
  for (const auto* it : eligible) {
    ReviewItem r;
    r.item_id = it->id;
    r.question = it->inputs["question"].get<std::string>();
    r.generated_answer = *it->output;
    if (it->inputs.contains("reference")) r.reference_answer = it->inputs["reference"].get<std::string>();
    r.show_reference = show_reference;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ReviewItem> load_items(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read review items " + path.string());
  std::vector<ReviewItem> out;
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
      throw ParseError(lineno, path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
    auto item = item_from_json(j);
    if (!ids.insert(item.item_id).second) {
      throw DuplicateError(item.item_id, lineno, "duplicate review item '" + item.item_id + "'");
    }
    out.push_back(std::move(item));
  }
  return out;
}

void save_items(const fs::path& path, std::span<const ReviewItem> items) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& it : items) {
    // Keep the reference on disk even for blinded items; the API hides it.
    json j = item_to_json(it);
    if (it.reference_answer) j["reference_answer"] = *it.reference_answer;
    out << j.dump() << "\n";
  }
}

std::vector<RatingRecord> compact(std::span<const RatingRecord> arrival_order) {
  std::map<std::pair<std::string, std::string>, const RatingRecord*> live;
  for (const auto& r : arrival_order) {
    auto key = std::make_pair(r.item_id, r.rater_id);
    auto it = live.find(key);
    if (it == live.end() || r.submitted_at >= it->second->submitted_at) live[key] = &r;
  }
  std::vector<RatingRecord> out;
  out.reserve(live.size());
  for (const auto& [key, r] : live) out.push_back(*r);
  return out;
}

ReviewReport build_report(std::span<const RatingRecord> ratings, std::size_t n_items, int threshold) {
  if (ratings.empty()) throw InvalidArgument("review report needs at least one rating");
  ReviewReport rep;
  rep.binarization_threshold = threshold;
  rep.n_ratings = ratings.size();

  std::vector<metrics::LikertRating> all;
  std::map<std::string, std::map<std::string, metrics::LikertRating>> by_rater;  // rater -> item -> scores
  std::set<std::string> items;
  for (const auto& r : ratings) {
    all.push_back(r.scores);
    by_rater[r.rater_id][r.item_id] = r.scores;
    items.insert(r.item_id);
  }
  rep.means = metrics::likert_summary(all);
  rep.n_raters = by_rater.size();
  rep.n_items = n_items ? n_items : items.size();
  for (const auto& [rater, rated] : by_rater) {
    rep.completion[rater] = static_cast<double>(rated.size()) / static_cast<double>(rep.n_items);
  }

  metrics::CriterionValues sum{};
  for (auto a = by_rater.begin(); a != by_rater.end(); ++a) {
    for (auto b = std::next(a); b != by_rater.end(); ++b) {
      std::vector<metrics::LikertRating> va, vb;
      for (const auto& [item, scores] : a->second) {
        auto hit = b->second.find(item);
        if (hit == b->second.end()) continue;
        va.push_back(scores);
        vb.push_back(hit->second);
      }
      if (va.empty()) continue;
      auto agreement = metrics::agreement_report(va, vb, threshold).agreement;
      for (std::size_t i = 0; i < 4; ++i) sum[i] += agreement[i];
      ++rep.rater_pairs;
    }
  }
  if (rep.rater_pairs == 0) {
    rep.iaa_omitted = true;
  } else {
    metrics::CriterionValues iaa{};
    for (std::size_t i = 0; i < 4; ++i) iaa[i] = sum[i] / static_cast<double>(rep.rater_pairs);
    rep.iaa = iaa;
  }
  return rep;
}

RatingLog::RatingLog(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_)) {
    std::ofstream out(path_);
    if (!out) throw IoError("cannot create rating log " + path_.string());
    out << kHeader << "\n";
  } else {
    read_all();  // reject foreign files up front
  }
}

void RatingLog::append(const RatingRecord& record) {
  std::ofstream out(path_, std::ios::app);
  if (!out) throw IoError("cannot append to rating log " + path_.string());
  out << rating_to_json(record).dump() << "\n";
  out.flush();
  if (!out) throw IoError("write to rating log " + path_.string() + " failed");
}

std::vector<RatingRecord> RatingLog::read_all() const {
  std::ifstream in(path_);
  if (!in) throw IoError("cannot read rating log " + path_.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw IndexError(path_.string() + " is not a " + std::string(kHeader) + " rating log");
  }
  std::vector<RatingRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(rating_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      // A torn final line from a crash mid-append is dropped; anything else is corruption.
      if (in.peek() == std::char_traits<char>::eof()) break;
      throw IndexError(path_.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

ReviewSession::ReviewSession(std::vector<ReviewItem> items, fs::path log_path)
    : items_(std::move(items)), log_(std::move(log_path)) {
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (!index_.emplace(items_[i].item_id, i).second) {
      throw DuplicateError(items_[i].item_id, 0, "duplicate review item '" + items_[i].item_id + "'");
    }
  }
  arrivals_ = log_.read_all();
}

std::vector<ReviewItem> ReviewSession::pending_for(const std::string& rater_id) const {
  std::shared_lock lock(mu_);
  std::set<std::string> done;
  for (const auto& r : arrivals_) {
    if (r.rater_id == rater_id) done.insert(r.item_id);
  }
  std::vector<ReviewItem> out;
  for (const auto& it : items_) {
    if (!done.count(it.item_id)) out.push_back(it);
  }
  return out;
}

void ReviewSession::submit(RatingRecord record) {
  validate_scores(record.scores);
  if (!index_.count(record.item_id)) throw NotFound("unknown review item '" + record.item_id + "'");
  if (record.submitted_at == 0) {
    record.submitted_at = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::system_clock::now().time_since_epoch())
                              .count();
  }
  std::unique_lock lock(mu_);
  log_.append(record);
  arrivals_.push_back(std::move(record));
}

std::vector<RatingRecord> ReviewSession::ratings() const {
  std::shared_lock lock(mu_);
  return compact(arrivals_);
}

ReviewReport ReviewSession::report(int threshold) const {
  return build_report(ratings(), items_.size(), threshold);
}

std::string_view default_rubric() {
  static constexpr std::string_view kRubric =
      R"(Rating guide: score each generated answer from 1 (bad) to 5 (good) on four criteria.

Readability - quality of the answer text itself, ignoring the question.
  1 (bad): very hard to read; frequent grammar errors; incoherent.
  2: hard to read in places; some grammar errors; coherence needs work.
  3: readable overall but with noticeable grammar errors or unclear passages.
  4: easy to read with only minor slips; clear and coherent overall.
  5 (good): reads naturally, well organized, no friction.

Relevancy - how well the answer sticks to the question asked.
  1 (bad): off-topic; does not address the question.
  2: touches the question but mostly irrelevant material.
  3: relevant in part; could be more focused.
  4: relevant with small digressions.
  5 (good): addresses the question directly and stays on it.

Accuracy - correctness of the medical information given.
  1 (bad): wrong or misleading throughout.
  2: several errors or misleading claims.
  3: partly correct with noticeable errors.
  4: correct apart from minor errors.
  5 (good): fully correct and trustworthy.

Completeness - coverage of the question, judged against the reference answer.
  1 (bad): barely addresses the topic; most needed information missing.
  2: covers some aspects; several key points missing.
  3: moderate coverage; could be more thorough.
  4: thorough apart from a few minor details.
  5 (good): covers every aspect of the question.
)";
  return kRubric;
}

}  // namespace clinitext::review
