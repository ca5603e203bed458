#include <gtest/gtest.h>

#include <httplib.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "clinitext/errors.hpp"
#include "clinitext/review_server.hpp"
#include "clinitext/review_service.hpp"

using namespace clinitext;
using namespace clinitext::review;
using metrics::Criterion;
using metrics::LikertRating;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("clinitext_review_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::vector<ReviewItem> items(std::size_t n) {
  std::vector<ReviewItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"item" + std::to_string(i), "question " + std::to_string(i), "answer " + std::to_string(i),
                   "reference " + std::to_string(i), true});
  }
  return out;
}

RatingRecord rec(const std::string& item, const std::string& rater, LikertRating s, std::int64_t at = 0) {
  return {item, rater, s, at};
}

harness::EvalReport answer_report(std::size_t n) {
  harness::EvalReport r;
  r.task = harness::TaskKind::answer_gen;
  for (std::size_t i = 0; i < n; ++i) {
    harness::ItemRecord it;
    char id[16];
    std::snprintf(id, sizeof id, "q%05zu", i);
    it.id = id;
    it.output = "generated " + it.id;
    it.inputs = {{"question", "question " + it.id}, {"reference", "reference " + it.id}};
    r.items.push_back(it);
  }
  r.n_items = r.completed = n;
  return r;
}

}  // namespace

TEST(Ratings, ValidationNamesCriterion) {
  try {
    validate_scores(LikertRating{{5, 6, 5, 5}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.criterion(), "relevancy");
  }
  json j = {{"item_id", "x"}, {"rater_id", "a"}, {"readability", 5}, {"relevancy", 5}, {"accuracy", 0},
            {"completeness", 5}};
  try {
    rating_from_json(j);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.criterion(), "accuracy");
  }
  j["accuracy"] = 4;
  auto r = rating_from_json(j);
  EXPECT_EQ(r.scores[Criterion::accuracy], 4);
  EXPECT_EQ(rating_to_json(r).at("accuracy"), 4);
  j.erase("rater_id");
  EXPECT_THROW(rating_from_json(j), ValidationError);
}

TEST(Ratings, CompactIsLastWriteWins) {
  std::vector<RatingRecord> log = {rec("x", "a", {{1, 1, 1, 1}}, 10), rec("x", "a", {{2, 2, 2, 2}}, 30),
                                   rec("x", "a", {{3, 3, 3, 3}}, 20), rec("x", "b", {{4, 4, 4, 4}}, 5),
                                   rec("x", "b", {{5, 5, 5, 5}}, 5)};
  auto c = compact(log);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].rater_id, "a");
  EXPECT_EQ(c[0].scores[Criterion::readability], 2);
  EXPECT_EQ(c[1].scores[Criterion::readability], 5);  // equal stamps: later arrival wins
}

TEST(Report, IdenticalRatersAndHandVector) {
  std::vector<RatingRecord> same;
  for (int i = 0; i < 3; ++i) {
    same.push_back(rec("i" + std::to_string(i), "a", {{5, 4, 3, 2}}, 1));
    same.push_back(rec("i" + std::to_string(i), "b", {{5, 4, 3, 2}}, 1));
  }
  auto r = build_report(same);
  ASSERT_TRUE(r.iaa.has_value());
  EXPECT_EQ(*r.iaa, (metrics::CriterionValues{1, 1, 1, 1}));
  EXPECT_EQ(r.means, (metrics::CriterionValues{5, 4, 3, 2}));
  EXPECT_EQ(r.n_raters, 2u);
  EXPECT_EQ(r.rater_pairs, 1u);

  const int a[] = {5, 4, 2, 3}, b[] = {5, 2, 3, 3};
  std::vector<RatingRecord> hv;
  for (int i = 0; i < 4; ++i) {
    hv.push_back(rec("i" + std::to_string(i), "a", {{5, 5, a[i], 5}}, 1));
    hv.push_back(rec("i" + std::to_string(i), "b", {{5, 5, b[i], 5}}, 1));
  }
  auto h = build_report(hv);
  EXPECT_EQ((*h.iaa)[static_cast<std::size_t>(Criterion::accuracy)], 0.5);
  EXPECT_EQ((*h.iaa)[static_cast<std::size_t>(Criterion::readability)], 1.0);
}

TEST(Report, NoCoRatedItemsOmitsIaa) {
  auto r = build_report(std::vector<RatingRecord>{rec("x", "a", {{4, 4, 4, 4}}), rec("y", "b", {{2, 2, 2, 2}})});
  EXPECT_FALSE(r.iaa.has_value());
  EXPECT_TRUE(r.iaa_omitted);
  EXPECT_EQ(r.means[0], 3.0);
  EXPECT_TRUE(report_to_json(r).at("iaa").is_null());
}

TEST(Report, MatchesMetricsAgreementAndIsOrderInvariant) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> s(1, 5);
  for (int round = 0; round < 50; ++round) {
    std::vector<RatingRecord> recs;
    std::vector<int> ra, rb;
    for (int i = 0; i < 12; ++i) {
      LikertRating x{{s(rng), s(rng), s(rng), s(rng)}}, y{{s(rng), s(rng), s(rng), s(rng)}};
      recs.push_back(rec("i" + std::to_string(i), "a", x, 1));
      recs.push_back(rec("i" + std::to_string(i), "b", y, 1));
      ra.push_back(x[Criterion::completeness]);
      rb.push_back(y[Criterion::completeness]);
    }
    auto base = build_report(recs);
    EXPECT_EQ((*base.iaa)[3], metrics::percentage_agreement(ra, rb));
    std::shuffle(recs.begin(), recs.end(), rng);
    auto shuffled = build_report(recs);
    EXPECT_EQ(report_to_json(base), report_to_json(shuffled));
  }
}

TEST(Sampling, SizesDeterminismAndBlinding) {
  auto rep = answer_report(2479);
  auto s = sample_items(rep, 50, 9);
  EXPECT_EQ(s.size(), 50u);
  EXPECT_TRUE(std::is_sorted(s.begin(), s.end(), [](auto& a, auto& b) { return a.item_id < b.item_id; }));
  auto again = sample_items(rep, 50, 9);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(s[i].item_id, again[i].item_id);
  EXPECT_EQ(sample_items(rep, 2479, 1).size(), 2479u);
  EXPECT_THROW(sample_items(rep, 2480, 1), InvalidArgument);

  auto blind = sample_items(rep, 3, 9, false);
  for (const auto& it : blind) EXPECT_FALSE(item_to_json(it).contains("reference_answer"));
  EXPECT_TRUE(item_to_json(s[0]).contains("reference_answer"));
}

TEST(Session, SubmitReplaceAndPersist) {
  TempDir tmp;
  auto log = tmp / "ratings.log";
  {
    ReviewSession session(items(3), log);
    session.submit(rec("item0", "a", {{5, 5, 5, 5}}));
    session.submit(rec("item0", "a", {{3, 3, 3, 3}}));
    auto all = session.ratings();
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0].scores[Criterion::readability], 3);
    EXPECT_THROW(session.submit(rec("nope", "a", {{5, 5, 5, 5}})), NotFound);
    EXPECT_THROW(session.submit(rec("item1", "a", {{5, 6, 5, 5}})), ValidationError);
    EXPECT_EQ(session.pending_for("a").size(), 2u);
    EXPECT_EQ(session.pending_for("b").size(), 3u);
  }
  ReviewSession reopened(items(3), log);
  ASSERT_EQ(reopened.ratings().size(), 1u);
  EXPECT_EQ(reopened.ratings()[0].scores[Criterion::readability], 3);
}

TEST(Session, ConcurrentSubmissionsLeaveOneRecord) {
  TempDir tmp;
  ReviewSession session(items(2), tmp / "r.log");
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 20; ++i) session.submit(rec("item" + std::to_string(i % 2), "a", {{1 + t % 5, 1, 1, 1}}));
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(session.ratings().size(), 2u);
  EXPECT_EQ(RatingLog(tmp / "r.log").read_all().size(), 160u);
}

TEST(Log, TornTailAndForeignFile) {
  TempDir tmp;
  auto path = tmp / "r.log";
  RatingLog log(path);
  log.append(rec("x", "a", {{1, 2, 3, 4}}, 5));
  std::ofstream(path, std::ios::app) << R"({"item_id":"x","rater)";
  auto all = RatingLog(path).read_all();
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].scores[Criterion::completeness], 4);

  std::ofstream(tmp / "foreign.log") << "hello\n";
  EXPECT_THROW(RatingLog(tmp / "foreign.log").read_all(), IndexError);
}

TEST(Items, SaveLoadRoundTrip) {
  TempDir tmp;
  auto it = items(3);
  it[1].reference_answer.reset();
  it[2].show_reference = false;
  save_items(tmp / "items.jsonl", it);
  auto back = load_items(tmp / "items.jsonl");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_FALSE(back[1].reference_answer.has_value());
  EXPECT_FALSE(back[2].show_reference);
  EXPECT_EQ(back[0].generated_answer, "answer 0");
}

TEST(Server, ApiRoundTrip) {
  TempDir tmp;
  ReviewSession session(items(2), tmp / "r.log");
  ReviewServer server(session);
  int port = server.bind("127.0.0.1", 0);
  std::thread th([&] { server.listen(); });
  httplib::Client cli("127.0.0.1", port);

  auto rubric = cli.Get("/api/rubric");
  ASSERT_TRUE(rubric);
  EXPECT_EQ(rubric->status, 200);
  EXPECT_EQ(rubric->body, std::string(default_rubric()));

  auto empty = cli.Get("/api/report");
  ASSERT_TRUE(empty);
  auto ej = json::parse(empty->body);
  EXPECT_EQ(ej.at("n_ratings"), 0);
  EXPECT_TRUE(ej.at("iaa").is_null());

  EXPECT_EQ(cli.Get("/api/items")->status, 400);
  auto pending = cli.Get("/api/items?rater_id=a");
  ASSERT_TRUE(pending);
  EXPECT_EQ(json::parse(pending->body).size(), 2u);

  json body = {{"item_id", "item0"}, {"rater_id", "a"}, {"readability", 5}, {"relevancy", 5}, {"accuracy", 4},
               {"completeness", 3}};
  auto ok = cli.Post("/api/ratings", body.dump(), "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(json::parse(ok->body).at("status"), "ok");

  body["relevancy"] = 6;
  auto bad = cli.Post("/api/ratings", body.dump(), "application/json");
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body).at("field"), "relevancy");

  body["relevancy"] = 5;
  body["item_id"] = "ghost";
  EXPECT_EQ(cli.Post("/api/ratings", body.dump(), "application/json")->status, 404);
  EXPECT_EQ(cli.Post("/api/ratings", "not json", "application/json")->status, 400);

  body["item_id"] = "item0";
  body["rater_id"] = "b";
  cli.Post("/api/ratings", body.dump(), "application/json");
  auto rep = json::parse(cli.Get("/api/report")->body);
  EXPECT_EQ(rep.at("n_ratings"), 2);
  EXPECT_EQ(rep.at("iaa").at("accuracy"), 1.0);
  EXPECT_EQ(rep.at("means").at("completeness"), 3.0);
  EXPECT_EQ(json::parse(cli.Get("/api/items?rater_id=a")->body).size(), 1u);

  server.stop();
  th.join();
}
