#include "clinitext/corpus_store.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "clinitext/errors.hpp"
#include "clinitext/text_core.hpp"
#include "clinitext/tsv.hpp"

namespace clinitext::corpus {
namespace fs = std::filesystem;
namespace {

constexpr std::array<char, 8> kCorpusMagic = {'C', 'L', 'T', 'X', 'C', 'O', 'R', 'P'};
constexpr std::array<char, 8> kPostingsMagic = {'C', 'L', 'T', 'X', 'P', 'O', 'S', 'T'};
constexpr const char* kCurrentFile = "CURRENT";

class BinaryWriter {
 public:
  explicit BinaryWriter(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
  }
  void bytes(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { bytes(reinterpret_cast<const char*>(&v), 1); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u64(s.size());
    bytes(s.data(), s.size());
  }
  void close() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
    out_.close();
  }

 private:
  std::ofstream out_;
  fs::path path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const fs::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IndexError("index file missing: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    data_ = ss.str();
  }
  void expect_header(const std::array<char, 8>& magic) {
    need(8);
    if (std::memcmp(data_.data(), magic.data(), 8) != 0) throw IndexError("bad magic in " + path_.string());
    pos_ = 8;
    auto version = u32();
    if (version != kIndexVersion) {
      throw IndexError("index version " + std::to_string(version) + " in " + path_.string() + " (expected " +
                       std::to_string(kIndexVersion) + ")");
    }
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  std::string str() {
    auto n = u64();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  // Sanity bound for element counts read from disk.
  std::uint64_t count() {
    auto n = u64();
    if (n > data_.size()) throw IndexError("corrupt index file " + path_.string());
    return n;
  }
  void expect_end() const {
    if (pos_ != data_.size()) throw IndexError("trailing bytes in " + path_.string());
  }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_) throw IndexError("truncated index file " + path_.string());
  }
  fs::path path_;
  std::string data_;
  std::size_t pos_ = 0;
};

std::string upper_trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::int64_t parse_id(const std::string& cell, const char* column, std::size_t line) {
  std::string_view v = cell;
  while (!v.empty() && (v.front() == ' ')) v.remove_prefix(1);
  while (!v.empty() && (v.back() == ' ')) v.remove_suffix(1);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw IngestError(std::string("line ") + std::to_string(line) + ": " + column + " '" + cell +
                      "' is not an integer");
  }
  return out;
}

fs::path current_generation(const fs::path& index_dir) {
  if (!fs::is_directory(index_dir)) throw IndexError("index directory not found: " + index_dir.string());
  std::ifstream in(index_dir / kCurrentFile);
  std::string gen;
  if (!in || !std::getline(in, gen) || gen.empty()) {
    throw IndexError("no index in " + index_dir.string() + " (missing CURRENT)");
  }
  if (gen.find('/') != std::string::npos || gen.find("..") != std::string::npos) {
    throw IndexError("corrupt CURRENT pointer in " + index_dir.string());
  }
  return index_dir / gen;
}

void write_index(const fs::path& gen_dir, const CorpusStats& st, const std::vector<NoteRecord>& notes,
                 const std::vector<std::uint64_t>& token_counts,
                 const std::map<std::string, std::vector<Posting>>& postings) {
  BinaryWriter corpus(gen_dir / "corpus.bin");
  corpus.bytes(kCorpusMagic.data(), kCorpusMagic.size());
  corpus.u32(kIndexVersion);
  corpus.u64(st.patients);
  corpus.u64(st.documents);
  corpus.u64(st.sentences);
  corpus.u64(notes.size());
  for (std::size_t i = 0; i < notes.size(); ++i) {
    const auto& n = notes[i];
    corpus.i64(n.row_id);
    corpus.i64(n.subject_id);
    corpus.u8(n.hadm_id ? 1 : 0);
    corpus.i64(n.hadm_id.value_or(0));
    corpus.str(n.category);
    corpus.str(n.text);
    corpus.u64(token_counts[i]);
  }
  corpus.close();

  BinaryWriter post(gen_dir / "postings.bin");
  post.bytes(kPostingsMagic.data(), kPostingsMagic.size());
  post.u32(kIndexVersion);
  post.u64(postings.size());
  for (const auto& [token, list] : postings) {
    post.str(token);
    post.u64(list.size());
    for (const auto& p : list) {
      post.i64(p.row_id);
      post.u64(p.term_frequency);
    }
  }
  post.close();
}

// Publishes gen_dir as the live generation and removes older ones.
void swap_in(const fs::path& index_dir, const std::string& gen_name) {
  const auto tmp = index_dir / (std::string(kCurrentFile) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << gen_name << "\n";
    out.flush();
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  fs::rename(tmp, index_dir / kCurrentFile);
  for (const auto& entry : fs::directory_iterator(index_dir)) {
    auto name = entry.path().filename().string();
    if (entry.is_directory() && name.starts_with("gen-") && name != gen_name) {
      std::error_code ec;
      fs::remove_all(entry.path(), ec);
    }
  }
}

}  // namespace

CorpusStats ingest(const fs::path& tsv_path, const fs::path& index_dir) {
  std::ifstream in(tsv_path, std::ios::binary);
  if (!in) throw IoError("cannot read " + tsv_path.string());
  tsv::Reader reader(in);

  auto header = reader.next();
  if (!header) throw SchemaError("ROW_ID", 1, "TSV " + tsv_path.string() + " has no header row");
  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < header->fields.size(); ++i) columns.emplace(upper_trim(header->fields[i]), i);
  for (const char* required : {"ROW_ID", "SUBJECT_ID", "CATEGORY", "TEXT"}) {
    if (!columns.count(required)) {
      throw SchemaError(required, 1, std::string("missing required column ") + required);
    }
  }
  const std::size_t c_row = columns["ROW_ID"], c_subject = columns["SUBJECT_ID"], c_cat = columns["CATEGORY"],
                    c_text = columns["TEXT"];
  std::optional<std::size_t> c_hadm;
  if (auto it = columns.find("HADM_ID"); it != columns.end()) c_hadm = it->second;

  std::vector<NoteRecord> notes;
  std::map<std::int64_t, std::size_t> seen;
  while (auto row = reader.next()) {
    if (row->fields.size() == 1 && row->fields[0].empty()) continue;  // blank line
    if (row->fields.size() != header->fields.size()) {
      throw IngestError("line " + std::to_string(row->line) + ": expected " + std::to_string(header->fields.size()) +
                        " fields, found " + std::to_string(row->fields.size()));
    }
    NoteRecord rec;
    rec.row_id = parse_id(row->fields[c_row], "ROW_ID", row->line);
    rec.subject_id = parse_id(row->fields[c_subject], "SUBJECT_ID", row->line);
    if (c_hadm && !row->fields[*c_hadm].empty()) rec.hadm_id = parse_id(row->fields[*c_hadm], "HADM_ID", row->line);
    rec.category = row->fields[c_cat];
    rec.text = row->fields[c_text];
    if (!seen.emplace(rec.row_id, row->line).second) {
      throw IngestError("duplicate ROW_ID " + std::to_string(rec.row_id) + " on line " + std::to_string(row->line));
    }
    notes.push_back(std::move(rec));
  }
  std::sort(notes.begin(), notes.end(), [](const auto& a, const auto& b) { return a.row_id < b.row_id; });

  CorpusStats st;
  std::set<std::int64_t> patients;
  std::vector<std::uint64_t> token_counts;
  std::map<std::string, std::vector<Posting>> postings;
  for (const auto& n : notes) {
    patients.insert(n.subject_id);
    st.sentences += text::split_sentences(n.text).size();
    auto tokens = text::tokenize(n.text, true);
    token_counts.push_back(tokens.size());
    std::map<std::string, std::uint64_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [t, c] : tf) postings[t].push_back({n.row_id, c});  // notes visited in row_id order
  }
  st.patients = patients.size();
  st.documents = notes.size();

  fs::create_directories(index_dir);
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  std::string gen_name = "gen-" + std::to_string(stamp);
  const auto gen_dir = index_dir / gen_name;
  fs::create_directories(gen_dir);
  try {
    write_index(gen_dir, st, notes, token_counts, postings);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(gen_dir, ec);
    throw;
  }
  swap_in(index_dir, gen_name);
  return st;
}

CorpusIndex CorpusIndex::open(const fs::path& index_dir) {
  const auto gen = current_generation(index_dir);
  CorpusIndex ix;

  BinaryReader corpus(gen / "corpus.bin");
  corpus.expect_header(kCorpusMagic);
  ix.stats_.patients = corpus.u64();
  ix.stats_.documents = corpus.u64();
  ix.stats_.sentences = corpus.u64();
  const auto n = corpus.count();
  ix.notes_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    NoteRecord rec;
    rec.row_id = corpus.i64();
    rec.subject_id = corpus.i64();
    bool has_hadm = corpus.u8() != 0;
    auto hadm = corpus.i64();
    if (has_hadm) rec.hadm_id = hadm;
    rec.category = corpus.str();
    rec.text = corpus.str();
    ix.token_counts_.push_back(corpus.u64());
    ix.by_row_[rec.row_id] = ix.notes_.size();
    ix.by_subject_[rec.subject_id].push_back(ix.notes_.size());
    ix.notes_.push_back(std::move(rec));
  }
  corpus.expect_end();
  if (ix.stats_.documents != ix.notes_.size()) throw IndexError("corpus stats disagree with record count");

  BinaryReader post(gen / "postings.bin");
  post.expect_header(kPostingsMagic);
  const auto tokens = post.count();
  for (std::uint64_t i = 0; i < tokens; ++i) {
    auto token = post.str();
    auto m = post.count();
    auto& list = ix.postings_[token];
    list.reserve(m);
    for (std::uint64_t k = 0; k < m; ++k) {
      Posting p;
      p.row_id = post.i64();
      p.term_frequency = post.u64();
      if (!ix.by_row_.count(p.row_id)) throw IndexError("posting for unknown row_id " + std::to_string(p.row_id));
      if (!list.empty() && list.back().row_id >= p.row_id) throw IndexError("unsorted postings for '" + token + "'");
      list.push_back(p);
    }
  }
  post.expect_end();
  return ix;
}

const NoteRecord& CorpusIndex::note(std::int64_t row_id) const {
  auto it = by_row_.find(row_id);
  if (it == by_row_.end()) throw NotFound("no note with ROW_ID " + std::to_string(row_id));
  return notes_[it->second];
}

std::vector<NoteRecord> CorpusIndex::patient_notes(std::int64_t subject_id, std::optional<std::size_t> limit) const {
  std::vector<NoteRecord> out;
  auto it = by_subject_.find(subject_id);
  if (it == by_subject_.end()) return out;
  for (auto idx : it->second) {  // notes_ is row_id ascending
    if (limit && out.size() >= *limit) break;
    out.push_back(notes_[idx]);
  }
  return out;
}

const std::vector<Posting>& CorpusIndex::postings(const std::string& token) const {
  static const std::vector<Posting> kEmpty;
  auto it = postings_.find(token);
  return it == postings_.end() ? kEmpty : it->second;
}

std::vector<SearchHit> CorpusIndex::search(std::string_view query, std::size_t limit) const {
  const auto toks = text::tokenize(query, true);
  std::set<std::string> terms(toks.begin(), toks.end());
  if (terms.empty()) throw InvalidArgument("search query has no tokens");

  std::vector<const std::vector<Posting>*> lists;
  for (const auto& t : terms) lists.push_back(&postings(t));
  std::sort(lists.begin(), lists.end(), [](auto* a, auto* b) { return a->size() < b->size(); });

  std::vector<SearchHit> hits;
  for (const auto& p : *lists.front()) {
    std::uint64_t tf_sum = p.term_frequency;
    bool all = true;
    for (std::size_t i = 1; i < lists.size() && all; ++i) {
      auto it = std::lower_bound(lists[i]->begin(), lists[i]->end(), p.row_id,
                                 [](const Posting& q, std::int64_t id) { return q.row_id < id; });
      if (it == lists[i]->end() || it->row_id != p.row_id) {
        all = false;
      } else {
        tf_sum += it->term_frequency;
      }
    }
    if (!all) continue;
    auto len = token_counts_[by_row_.at(p.row_id)];
    hits.push_back({p.row_id, static_cast<double>(tf_sum) / static_cast<double>(len)});
  }
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    return a.score != b.score ? a.score > b.score : a.row_id < b.row_id;
  });
  if (hits.size() > limit) hits.resize(limit);
  return hits;
}

CorpusStats stats(const fs::path& index_dir) { return CorpusIndex::open(index_dir).stats(); }

NoteRecord get_note(const fs::path& index_dir, std::int64_t row_id) {
  return CorpusIndex::open(index_dir).note(row_id);
}

std::vector<NoteRecord> get_patient_notes(const fs::path& index_dir, std::int64_t subject_id,
                                          std::optional<std::size_t> limit) {
  return CorpusIndex::open(index_dir).patient_notes(subject_id, limit);
}

std::vector<SearchHit> search(const fs::path& index_dir, std::string_view query, std::size_t limit) {
  return CorpusIndex::open(index_dir).search(query, limit);
}

}  // namespace clinitext::corpus
