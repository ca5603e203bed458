#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace clinitext::corpus {

struct NoteRecord {
  std::int64_t row_id = 0;
  std::int64_t subject_id = 0;
  std::optional<std::int64_t> hadm_id;
  std::string category;
  std::string text;  // byte-exact TSV cell after unquoting

  friend bool operator==(const NoteRecord&, const NoteRecord&) = default;
};

struct CorpusStats {
  std::uint64_t patients = 0;
  std::uint64_t documents = 0;
  std::uint64_t sentences = 0;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

struct SearchHit {
  std::int64_t row_id = 0;
  double score = 0.0;  // summed query-term frequency / note token count

  friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

struct Posting {
  std::int64_t row_id = 0;
  std::uint64_t term_frequency = 0;
};

inline constexpr std::uint32_t kIndexVersion = 1;

// Parses a NOTEEVENTS-style TSV and atomically replaces the index stored in
// index_dir. Throws SchemaError, IngestError or IoError.
CorpusStats ingest(const std::filesystem::path& tsv_path, const std::filesystem::path& index_dir);

// Read-only view of a persisted index. Immutable once opened, so one
// instance may serve any number of concurrent readers.
class CorpusIndex {
 public:
  // Throws IndexError when the directory is missing, corrupt or of another version.
  static CorpusIndex open(const std::filesystem::path& index_dir);

  const CorpusStats& stats() const noexcept { return stats_; }
  std::size_t size() const noexcept { return notes_.size(); }
  const std::vector<NoteRecord>& notes() const noexcept { return notes_; }  // row_id ascending

  // Throws NotFound.
  const NoteRecord& note(std::int64_t row_id) const;
  std::vector<NoteRecord> patient_notes(std::int64_t subject_id, std::optional<std::size_t> limit = {}) const;
  // AND semantics over distinct query tokens; ties go to the lower row_id.
  // Throws InvalidArgument when the query has no tokens.
  std::vector<SearchHit> search(std::string_view query, std::size_t limit = 10) const;
  const std::vector<Posting>& postings(const std::string& token) const;

 private:
  CorpusStats stats_;
  std::vector<NoteRecord> notes_;
  std::vector<std::uint64_t> token_counts_;
  std::unordered_map<std::int64_t, std::size_t> by_row_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> by_subject_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

CorpusStats stats(const std::filesystem::path& index_dir);
NoteRecord get_note(const std::filesystem::path& index_dir, std::int64_t row_id);
std::vector<NoteRecord> get_patient_notes(const std::filesystem::path& index_dir, std::int64_t subject_id,
                                          std::optional<std::size_t> limit = {});
std::vector<SearchHit> search(const std::filesystem::path& index_dir, std::string_view query,
                              std::size_t limit = 10);

}  // namespace clinitext::corpus
