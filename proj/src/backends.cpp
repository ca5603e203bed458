#include "clinitext/backends.hpp"

#include <algorithm>
#include <charconv>

#include "clinitext/errors.hpp"
#include "clinitext/text_core.hpp"

namespace clinitext::backends {

using nlohmann::json;

std::string_view task_name(Task t) {
  switch (t) {
    case Task::qa: return "qa";
    case Task::summarize: return "summarize";
    case Task::simplify: return "simplify";
    case Task::translate: return "translate";
  }
  return "qa";
}

Task parse_task(std::string_view name) {
  if (name == "qa") return Task::qa;
  if (name == "summarize") return Task::summarize;
  if (name == "simplify") return Task::simplify;
  if (name == "translate") return Task::translate;
  throw InvalidArgument("unknown generation task '" + std::string(name) + "'");
}

void GenerationRequest::validate() const {
  if (max_new_tokens < 1) throw InvalidArgument("max_new_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw InvalidArgument("temperature must be >= 0");
}

void OptionScoreRequest::validate() const {
  if (options.size() < 2) throw InvalidArgument("score_options needs at least 2 options");
}

std::size_t argmax(const std::vector<double>& scores) {
  if (scores.empty()) throw InvalidArgument("argmax of an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

json to_wire(const GenerationRequest& r) {
  json j = {{"task", task_name(r.task)},
            {"prompt", r.prompt},
            {"max_new_tokens", r.max_new_tokens},
            {"temperature", r.temperature}};
  if (!r.stop.empty()) j["stop"] = r.stop;
  if (r.target_language) j["target_language"] = *r.target_language;
  return j;
}

json to_wire(const OptionScoreRequest& r) {
  json j = {{"question", r.question}, {"options", r.options}};
  j["context"] = r.context ? json(*r.context) : json(nullptr);
  return j;
}

GenerationRequest generation_request_from_wire(const json& j) {
  try {
    GenerationRequest r;
    r.task = parse_task(j.at("task").get<std::string>());
    r.prompt = j.at("prompt").get<std::string>();
    r.max_new_tokens = j.at("max_new_tokens").get<std::size_t>();
    r.temperature = j.at("temperature").get<double>();
    if (j.contains("stop") && !j["stop"].is_null()) r.stop = j["stop"].get<std::vector<std::string>>();
    if (j.contains("target_language") && !j["target_language"].is_null()) {
      r.target_language = j["target_language"].get<std::string>();
    }
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed generate request: ") + e.what());
  }
}

OptionScoreRequest option_request_from_wire(const json& j) {
  try {
    OptionScoreRequest r;
    r.question = j.at("question").get<std::string>();
    if (j.contains("context") && !j["context"].is_null()) r.context = j["context"].get<std::string>();
    r.options = j.at("options").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed score_options request: ") + e.what());
  }
}

GenerationResponse generation_response_from_wire(const json& j) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string() || !j.contains("model_id") ||
      !j["model_id"].is_string()) {
    throw ProtocolError("generate response must be {\"text\":str,\"model_id\":str}");
  }
  return {j["text"].get<std::string>(), j["model_id"].get<std::string>()};
}

std::vector<double> scores_from_wire(const json& j, std::size_t expected) {
  if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array()) {
    throw ProtocolError("score_options response must be {\"scores\":[float]}");
  }
  std::vector<double> out;
  for (const auto& v : j["scores"]) {
    if (!v.is_number()) throw ProtocolError("score_options response holds a non-numeric score");
    out.push_back(v.get<double>());
  }
  if (out.size() != expected) {
    throw ProtocolError("score_options returned " + std::to_string(out.size()) + " scores for " +
                        std::to_string(expected) + " options");
  }
  return out;
}

std::string strip_task_prefix(std::string_view prompt, Task task) {
  std::string prefix = std::string(task_name(task)) + ": ";
  if (prompt.starts_with(prefix)) prompt.remove_prefix(prefix.size());
  return std::string(prompt);
}

std::vector<double> overlap_scores(const OptionScoreRequest& request) {
  std::string source = request.question;
  if (request.context) source += "\n" + *request.context;
  const auto source_tokens = text::content_tokens(source);
  std::vector<double> out;
  out.reserve(request.options.size());
  for (const auto& opt : request.options) {
    std::size_t shared = 0;
    for (const auto& t : text::content_tokens(opt)) shared += source_tokens.count(t);
    out.push_back(static_cast<double>(shared));
  }
  return out;
}

namespace {

std::string apply_stop(std::string text, const std::vector<std::string>& stop) {
  std::size_t cut = text.size();
  for (const auto& s : stop) {
    if (s.empty()) continue;
    cut = std::min(cut, text.find(s));
  }
  text.resize(std::min(cut, text.size()));
  return text;
}

std::string question_line(std::string_view prompt, std::string_view payload) {
  std::size_t pos = 0;
  while (pos <= prompt.size()) {
    std::size_t nl = prompt.find('\n', pos);
    auto line = prompt.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    if (line.starts_with("Question: ")) return std::string(line.substr(10));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  auto nl = payload.find('\n');
  return std::string(payload.substr(0, nl));
}

}  // namespace

StubBackend::StubBackend(StubKind kind, std::size_t k) : kind_(kind), k_(k) {
  if (kind_ == StubKind::lead_k && k_ == 0) throw InvalidArgument("lead-k stub needs k >= 1");
}

std::string StubBackend::model_id() const {
  switch (kind_) {
    case StubKind::echo: return "stub:echo";
    case StubKind::lead_k: return "stub:lead-k:" + std::to_string(k_);
    case StubKind::template_answer: return "stub:template-answer";
    case StubKind::overlap_scorer: return "stub:overlap-scorer";
  }
  return "stub";
}

GenerationResponse StubBackend::generate(const GenerationRequest& request) {
  request.validate();
  const std::string payload = strip_task_prefix(request.prompt, request.task);
  std::string out;
  switch (kind_) {
    case StubKind::echo:
    case StubKind::overlap_scorer:
      out = payload;
      break;
    case StubKind::lead_k: {
      auto sentences = text::split_sentences(payload);
      for (std::size_t i = 0; i < std::min(k_, sentences.size()); ++i) {
        if (i) out.push_back(' ');
        out += sentences[i].text;
      }
      break;
    }
    case StubKind::template_answer:
      out = "answer: " + question_line(request.prompt, payload);
      break;
  }
  out = apply_stop(std::move(out), request.stop);
  return {text::truncate_to_tokens(out, request.max_new_tokens), model_id()};
}

std::vector<double> StubBackend::score_options(const OptionScoreRequest& request) {
  request.validate();
  if (kind_ == StubKind::template_answer) {
    std::vector<double> out(request.options.size(), 0.0);
    out[0] = 1.0;
    return out;
  }
  return overlap_scores(request);
}

std::unique_ptr<GenerationBackend> make_stub(std::string_view spec) {
  if (spec.starts_with("stub:")) spec.remove_prefix(5);
  if (spec == "echo") return std::make_unique<StubBackend>(StubKind::echo);
  if (spec == "template-answer") return std::make_unique<StubBackend>(StubKind::template_answer);
  if (spec == "overlap-scorer") return std::make_unique<StubBackend>(StubKind::overlap_scorer);
  if (spec == "lead-k") return std::make_unique<StubBackend>(StubKind::lead_k, 1);
  if (spec.starts_with("lead-k:")) {
    auto digits = spec.substr(7);
    std::size_t k = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || k == 0) {
      throw InvalidArgument("bad lead-k stub spec '" + std::string(spec) + "'");
    }
    return std::make_unique<StubBackend>(StubKind::lead_k, k);
  }
  throw InvalidArgument("unknown stub backend '" + std::string(spec) + "'");
}

}  // namespace clinitext::backends
