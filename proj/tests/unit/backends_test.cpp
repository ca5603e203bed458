#include <gtest/gtest.h>

#include <httplib.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <thread>

#include "clinitext/backends.hpp"
#include "clinitext/errors.hpp"
#include "clinitext/text_core.hpp"

using namespace clinitext;
using namespace clinitext::backends;
using nlohmann::json;

namespace {

// In-process HTTP server on an ephemeral port; handlers installed by each test.
class FixtureServer {
 public:
  httplib::Server server;

  void start() {
    port_ = server.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~FixtureServer() {
    server.stop();
    if (thread_.joinable()) thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  int port_ = 0;
  std::thread thread_;
};

// Port that was free a moment ago and now has nothing listening.
int closed_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

GenerationRequest req(Task task, std::string prompt) {
  GenerationRequest r;
  r.task = task;
  r.prompt = std::move(prompt);
  return r;
}

}  // namespace

TEST(Stubs, EchoStripsTaskPrefix) {
  auto echo = make_stub("echo");
  auto out = echo->generate(req(Task::simplify, "simplify: Auscultation reveals wheezing."));
  EXPECT_EQ(out.text, "Auscultation reveals wheezing.");
  EXPECT_EQ(out.model_id, "stub:echo");
  EXPECT_EQ(echo->generate(req(Task::qa, "simplify: x")).text, "simplify: x");
}

TEST(Stubs, LeadKReturnsLeadingSentences) {
  const std::string doc = "First finding is stable. Second finding worsened. Third is new.";
  auto lead = make_stub("stub:lead-k");
  EXPECT_EQ(lead->generate(req(Task::summarize, "summarize: " + doc)).text, text::split_sentences(doc)[0].text);
  auto lead2 = make_stub("lead-k:2");
  EXPECT_EQ(lead2->generate(req(Task::summarize, doc)).text, "First finding is stable. Second finding worsened.");
  EXPECT_EQ(lead2->model_id(), "stub:lead-k:2");
  EXPECT_THROW(make_stub("lead-k:0"), InvalidArgument);
  EXPECT_THROW(make_stub("lead-k:x"), InvalidArgument);
  EXPECT_THROW(make_stub("oracle"), InvalidArgument);
}

TEST(Stubs, TemplateAnswerAndTruncation) {
  auto t = make_stub("template-answer");
  auto out = t->generate(req(Task::qa, "Answer the consumer health question.\nQuestion: Is aspirin safe?\nAnswer:"));
  EXPECT_EQ(out.text, "answer: Is aspirin safe?");
  auto r = req(Task::simplify, "simplify: one two three four five");
  r.max_new_tokens = 2;
  EXPECT_EQ(make_stub("echo")->generate(r).text, "one two");
  EXPECT_EQ(t->score_options({"q", std::nullopt, {"a", "b", "c"}}), (std::vector<double>{1, 0, 0}));
}

TEST(Stubs, OverlapScorer) {
  auto s = make_stub("overlap-scorer");
  auto a = s->score_options({"which organ pumps blood", std::nullopt, {"the heart", "the femur"}});
  EXPECT_EQ(a, (std::vector<double>{0, 0}));
  EXPECT_EQ(argmax(a), 0u);
  auto b = s->score_options(
      {"blood pressure medication", std::nullopt, {"controls blood pressure", "treats fungal infection"}});
  EXPECT_EQ(b, (std::vector<double>{2, 0}));
  EXPECT_EQ(argmax(b), 0u);
  auto c = s->score_options({"q", std::string("fungal rash"), {"same", "same", "fungal"}});
  EXPECT_EQ(c, (std::vector<double>{0, 0, 1}));
  EXPECT_EQ(argmax(c), 2u);
  EXPECT_THROW(s->score_options({"q", std::nullopt, {"only"}}), InvalidArgument);
  EXPECT_TRUE(s->health_check().ok);
}

TEST(Stubs, Deterministic) {
  for (const char* spec : {"echo", "lead-k:2", "template-answer", "overlap-scorer"}) {
    auto a = make_stub(spec), b = make_stub(spec);
    auto r = req(Task::summarize, "summarize: Alpha beta. Gamma delta. Epsilon.");
    EXPECT_EQ(a->generate(r), b->generate(r));
  }
}

TEST(Requests, Validation) {
  auto r = req(Task::qa, "x");
  r.max_new_tokens = 0;
  EXPECT_THROW(r.validate(), InvalidArgument);
  r.max_new_tokens = 1;
  r.temperature = -0.1;
  EXPECT_THROW(r.validate(), InvalidArgument);
  EXPECT_THROW(parse_task("poem"), InvalidArgument);
  EXPECT_EQ(parse_task("translate"), Task::translate);
  EXPECT_THROW(argmax({}), InvalidArgument);
}

TEST(Wire, ExactShapes) {
  auto r = req(Task::translate, "translate: hola");
  r.max_new_tokens = 16;
  r.temperature = 0.5;
  EXPECT_EQ(to_wire(r).dump(),
            R"({"max_new_tokens":16,"prompt":"translate: hola","task":"translate","temperature":0.5})");
  r.stop = {"\n"};
  r.target_language = "en";
  auto j = to_wire(r);
  EXPECT_EQ(j["stop"], json::array({"\n"}));
  EXPECT_EQ(j["target_language"], "en");
  auto back = generation_request_from_wire(j);
  EXPECT_EQ(back.prompt, r.prompt);
  EXPECT_EQ(back.stop, r.stop);
  EXPECT_EQ(back.target_language, r.target_language);

  OptionScoreRequest o{"q", std::nullopt, {"a", "b"}};
  EXPECT_EQ(to_wire(o).dump(), R"({"context":null,"options":["a","b"],"question":"q"})");
  o.context = "ctx";
  EXPECT_EQ(option_request_from_wire(to_wire(o)).context, "ctx");

  EXPECT_THROW(generation_response_from_wire(json{{"text", 1}}), ProtocolError);
  EXPECT_THROW(scores_from_wire(json{{"scores", {1, 2}}}, 3), ProtocolError);
  EXPECT_THROW(scores_from_wire(json{{"scores", {"x", 2}}}, 2), ProtocolError);
  EXPECT_EQ(scores_from_wire(json{{"scores", {0.5, 2}}}, 2), (std::vector<double>{0.5, 2}));
}

TEST(Http, RoundTripWithAuthAndPrefix) {
  FixtureServer fx;
  std::string seen_auth, seen_body;
  fx.server.Post("/api/v1/generate", [&](const httplib::Request& rq, httplib::Response& rs) {
    seen_auth = rq.get_header_value("Authorization");
    seen_body = rq.body;
    rs.set_content(R"({"text":"ok","model_id":"m"})", "application/json");
  });
  fx.server.Post("/api/v1/score_options", [&](const httplib::Request& rq, httplib::Response& rs) {
    auto j = json::parse(rq.body);
    json scores = json::array();
    for (std::size_t i = 0; i < j["options"].size(); ++i) scores.push_back(static_cast<double>(i));
    rs.set_content(json{{"scores", scores}}.dump(), "application/json");
  });
  fx.start();
  HttpBackend be({fx.url() + "/api/", "secret"});
  auto out = be.generate(req(Task::qa, "hello"));
  EXPECT_EQ(out, (GenerationResponse{"ok", "m"}));
  EXPECT_EQ(seen_auth, "Bearer secret");
  EXPECT_EQ(json::parse(seen_body), to_wire(req(Task::qa, "hello")));
  EXPECT_EQ(be.model_id(), "m");
  EXPECT_EQ(be.score_options({"q", std::nullopt, {"a", "b", "c"}}), (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(be.last_attempts(), 1u);
}

TEST(Http, ErrorStatusIsNotRetried) {
  FixtureServer fx;
  std::atomic<int> hits{0};
  fx.server.Post("/v1/generate", [&](const httplib::Request&, httplib::Response& rs) {
    ++hits;
    rs.status = 500;
    rs.set_content(std::string(500, 'x'), "text/plain");
  });
  fx.server.Get("/v1/health", [](const httplib::Request&, httplib::Response& rs) { rs.status = 500; });
  fx.start();
  HttpBackend be({fx.url()});
  try {
    be.generate(req(Task::qa, "x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.status(), 500);
    EXPECT_LE(e.body_excerpt().size(), 203u);
  }
  EXPECT_EQ(hits.load(), 1);
  auto h = be.health_check();
  EXPECT_FALSE(h.ok);
  EXPECT_EQ(h.reason, "status 500");
}

TEST(Http, TimeoutsRetryWithinBudget) {
  FixtureServer fx;
  std::atomic<int> hits{0};
  fx.server.Post("/v1/generate", [&](const httplib::Request&, httplib::Response& rs) {
    ++hits;
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    rs.set_content(R"({"text":"late","model_id":"m"})", "application/json");
  });
  fx.start();
  HttpBackendConfig cfg{fx.url()};
  cfg.timeout = std::chrono::milliseconds(100);
  HttpBackend be(cfg);
  try {
    be.generate(req(Task::qa, "x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.status(), 0);
    EXPECT_NE(std::string(e.what()).find("3 attempts"), std::string::npos) << e.what();
  }
  EXPECT_EQ(be.last_attempts(), 3u);
  EXPECT_LE(hits.load(), 3);
}

TEST(Http, MalformedBodyIsProtocolError) {
  FixtureServer fx;
  fx.server.Post("/v1/generate", [](const httplib::Request&, httplib::Response& rs) {
    rs.set_content("<html>nope</html>", "text/html");
  });
  fx.server.Post("/v1/score_options", [](const httplib::Request&, httplib::Response& rs) {
    rs.set_content(R"({"scores":[1]})", "application/json");
  });
  fx.start();
  HttpBackend be({fx.url()});
  EXPECT_THROW(be.generate(req(Task::qa, "x")), ProtocolError);
  EXPECT_THROW(be.score_options({"q", std::nullopt, {"a", "b"}}), ProtocolError);
}

TEST(Http, ClosedPortIsUnreachable) {
  HttpBackendConfig cfg{"http://127.0.0.1:" + std::to_string(closed_port())};
  cfg.timeout = std::chrono::milliseconds(500);
  HttpBackend be(cfg);
  auto h = be.health_check();
  EXPECT_FALSE(h.ok);
  EXPECT_EQ(h.reason, "connection refused");
  try {
    be.generate(req(Task::qa, "x"));
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.status(), 0);
    EXPECT_NE(std::string(e.what()).find("connection refused"), std::string::npos);
  }
  EXPECT_EQ(be.last_attempts(), 3u);
  EXPECT_THROW(HttpBackend({"https://example.org"}), InvalidArgument);
}

TEST(Http, InFlightLimitIsRespected) {
  FixtureServer fx;
  std::atomic<int> current{0}, peak{0};
  fx.server.new_task_queue = [] { return new httplib::ThreadPool(8); };
  fx.server.Post("/v1/generate", [&](const httplib::Request&, httplib::Response& rs) {
    int now = ++current;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    --current;
    rs.set_content(R"({"text":"ok","model_id":"m"})", "application/json");
  });
  fx.start();
  HttpBackendConfig cfg{fx.url()};
  cfg.max_in_flight = 2;
  HttpBackend be(cfg);
  std::vector<std::thread> callers;
  for (int i = 0; i < 6; ++i) callers.emplace_back([&] { be.generate(req(Task::qa, "x")); });
  for (auto& t : callers) t.join();
  EXPECT_LE(peak.load(), 2);
  EXPECT_GE(peak.load(), 1);
}
