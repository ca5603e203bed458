#include <httplib.h>

#include "clinitext/backends.hpp"
#include "clinitext/errors.hpp"

namespace clinitext::backends {
namespace {

constexpr std::size_t kBodyExcerpt = 200;

std::string excerpt(const std::string& body) {
  return body.size() <= kBodyExcerpt ? body : body.substr(0, kBodyExcerpt) + "...";
}

void configure(httplib::Client& cli, std::chrono::milliseconds timeout) {
  auto sec = static_cast<time_t>(timeout.count() / 1000);
  auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

std::string describe(httplib::Error err) {
  if (err == httplib::Error::Connection) return "connection refused";
  if (err == httplib::Error::Read) return "read failed or timed out";
  if (err == httplib::Error::ConnectionTimeout) return "connection timed out";
  return httplib::to_string(err);
}

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  const std::string_view url = config_.base_url;
  constexpr std::string_view kScheme = "http://";
  if (!url.starts_with(kScheme)) {
    throw InvalidArgument("backend URL must start with http:// (got '" + config_.base_url + "')");
  }
  auto slash = url.find('/', kScheme.size());
  scheme_host_port_ = std::string(url.substr(0, slash));
  if (slash != std::string_view::npos) {
    path_prefix_ = std::string(url.substr(slash));
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
  if (config_.max_in_flight == 0) config_.max_in_flight = 1;
}

std::string HttpBackend::model_id() const {
  std::lock_guard lock(mu_);
  return last_model_id_.empty() ? config_.base_url : last_model_id_;
}

std::size_t HttpBackend::last_attempts() const {
  std::lock_guard lock(mu_);
  return last_attempts_;
}

nlohmann::json HttpBackend::post(const std::string& path, const nlohmann::json& body) {
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    HttpBackend* self;
    ~Release() {
      {
        std::lock_guard lock(self->mu_);
        --self->in_flight_;
      }
      self->cv_.notify_one();
    }
  } release{this};

  httplib::Headers headers;
  if (!config_.auth_token.empty()) headers.emplace("Authorization", "Bearer " + config_.auth_token);
  const std::string payload = body.dump();

  std::size_t attempts = 0;
  httplib::Error last_error = httplib::Error::Success;
  httplib::Result res{nullptr, httplib::Error::Unknown};
  while (attempts <= config_.retry_budget) {
    ++attempts;
    httplib::Client cli(scheme_host_port_);
    configure(cli, config_.timeout);
    res = cli.Post(path_prefix_ + path, headers, payload, "application/json");
    if (res) break;
    last_error = res.error();
  }
  {
    std::lock_guard lock(mu_);
    last_attempts_ = attempts;
  }
  if (!res) {
    throw BackendError(0, "",
                       "backend unreachable at " + config_.base_url + ": " + describe(last_error) + " (" +
                           std::to_string(attempts) + " attempts)");
  }
  if (res->status < 200 || res->status >= 300) {
    throw BackendError(res->status, excerpt(res->body),
                       "backend returned status " + std::to_string(res->status) + ": " + excerpt(res->body));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("backend response is not JSON: " + excerpt(res->body));
  }
}

GenerationResponse HttpBackend::generate(const GenerationRequest& request) {
  request.validate();
  auto out = generation_response_from_wire(post("/v1/generate", to_wire(request)));
  std::lock_guard lock(mu_);
  last_model_id_ = out.model_id;
  return out;
}

std::vector<double> HttpBackend::score_options(const OptionScoreRequest& request) {
  request.validate();
  return scores_from_wire(post("/v1/score_options", to_wire(request)), request.options.size());
}

HealthStatus HttpBackend::health_check() {
  httplib::Client cli(scheme_host_port_);
  configure(cli, config_.timeout);
  httplib::Headers headers;
  if (!config_.auth_token.empty()) headers.emplace("Authorization", "Bearer " + config_.auth_token);
  auto res = cli.Get(path_prefix_ + "/v1/health", headers);
  if (!res) return HealthStatus::unreachable(describe(res.error()));
  if (res->status >= 500) return HealthStatus::unreachable("status " + std::to_string(res->status));
  return HealthStatus::healthy();
}

}  // namespace clinitext::backends
