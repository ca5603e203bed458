#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "clinitext/harness.hpp"
#include "clinitext/metrics.hpp"

namespace clinitext::review {

struct ReviewItem {
  std::string item_id;
  std::string question;
  std::string generated_answer;
  std::optional<std::string> reference_answer;
  bool show_reference = true;
};

struct RatingRecord {
  std::string item_id;
  std::string rater_id;
  metrics::LikertRating scores;
  std::int64_t submitted_at = 0;  // epoch milliseconds
};

struct ReviewReport {
  metrics::CriterionValues means{};
  std::optional<metrics::CriterionValues> iaa;  // omitted without co-rated items
  bool iaa_omitted = false;
  std::size_t rater_pairs = 0;  // pairs that contributed to iaa
  std::size_t n_items = 0;
  std::size_t n_raters = 0;
  std::size_t n_ratings = 0;
  std::map<std::string, double> completion;  // rater -> rated/n_items
  int binarization_threshold = metrics::kDefaultBinarizationThreshold;
};

// JSON shapes of the /api surface. item_to_json drops reference_answer when
// show_reference is false.
nlohmann::json item_to_json(const ReviewItem& item);
ReviewItem item_from_json(const nlohmann::json& j);
nlohmann::json rating_to_json(const RatingRecord& r);
// Throws ValidationError naming the missing/invalid field or criterion.
RatingRecord rating_from_json(const nlohmann::json& j);
nlohmann::json report_to_json(const ReviewReport& r);

// Throws ValidationError naming the first criterion outside 1..5.
void validate_scores(const metrics::LikertRating& scores);

// Seeded uniform sample without replacement of completed items carrying a
// question, returned in item_id order. Throws InvalidArgument when n exceeds
// the eligible items.
std::vector<ReviewItem> sample_items(const harness::EvalReport& report, std::size_t n, std::uint64_t seed,
                                     bool show_reference = true);

std::vector<ReviewItem> load_items(const std::filesystem::path& path);
void save_items(const std::filesystem::path& path, std::span<const ReviewItem> items);

// Keeps the last record per (rater_id, item_id): later submitted_at wins,
// later arrival breaks ties. Output ordered by (item_id, rater_id).
std::vector<RatingRecord> compact(std::span<const RatingRecord> arrival_order);

// Means over all records; IAA per criterion from metrics::percentage_agreement
// over each rater pair's co-rated items, averaged across pairs. n_items is
// the item count used for completion fractions (0 = distinct rated items).
ReviewReport build_report(std::span<const RatingRecord> ratings, std::size_t n_items = 0,
                          int threshold = metrics::kDefaultBinarizationThreshold);

// Append-only rating log: a version header line followed by one JSON record
// per line.
class RatingLog {
 public:
  static constexpr std::string_view kHeader = "clinitext-ratings v1";

  explicit RatingLog(std::filesystem::path path);

  void append(const RatingRecord& record);
  // Records in arrival order. Throws IndexError on a foreign or corrupt log.
  std::vector<RatingRecord> read_all() const;

 private:
  std::filesystem::path path_;
};

// Items + rating log behind the review HTTP API. Thread-safe: submissions are
// serialized, reads see a consistent snapshot.
class ReviewSession {
 public:
  ReviewSession(std::vector<ReviewItem> items, std::filesystem::path log_path);

  const std::vector<ReviewItem>& items() const noexcept { return items_; }
  // Items the rater has not rated yet, in item order.
  std::vector<ReviewItem> pending_for(const std::string& rater_id) const;
  // Throws NotFound for an unknown item and ValidationError for bad scores.
  // Stamps submitted_at when it is 0.
  void submit(RatingRecord record);
  std::vector<RatingRecord> ratings() const;  // compacted snapshot
  ReviewReport report(int threshold = metrics::kDefaultBinarizationThreshold) const;

 private:
  std::vector<ReviewItem> items_;
  std::map<std::string, std::size_t> index_;
  RatingLog log_;
  mutable std::shared_mutex mu_;
  std::vector<RatingRecord> arrivals_;
};

// Default rubric served at GET /api/rubric.
std::string_view default_rubric();

}  // namespace clinitext::review
