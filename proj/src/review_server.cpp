#include "clinitext/review_server.hpp"

#include <httplib.h>

#include "clinitext/errors.hpp"

namespace clinitext::review {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

struct ReviewServer::Impl {
  ReviewSession& session;
  ServerOptions options;
  httplib::Server server;

  Impl(ReviewSession& s, ServerOptions o) : session(s), options(std::move(o)) {
    server.Get("/api/items", [this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("rater_id") || req.get_param_value("rater_id").empty()) {
        send_json(res, 400, {{"error", "validation"}, {"field", "rater_id"}, {"message", "rater_id is required"}});
        return;
      }
      json items = json::array();
      for (const auto& it : session.pending_for(req.get_param_value("rater_id"))) items.push_back(item_to_json(it));
      send_json(res, 200, items);
    });

    server.Post("/api/ratings", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error&) {
        send_json(res, 400, {{"error", "validation"}, {"field", "body"}, {"message", "body is not JSON"}});
        return;
      }
      try {
        auto record = rating_from_json(body);
        session.submit(record);
        send_json(res, 200, {{"status", "ok"}, {"item_id", record.item_id}, {"rater_id", record.rater_id}});
      } catch (const ValidationError& e) {
        send_json(res, 400, {{"error", "validation"}, {"field", e.criterion()}, {"message", e.what()}});
      } catch (const NotFound& e) {
        send_json(res, 404, {{"error", "not_found"}, {"message", e.what()}});
      }
    });

    server.Get("/api/report", [this](const httplib::Request&, httplib::Response& res) {
      auto ratings = session.ratings();
      if (ratings.empty()) {
        send_json(res, 200, {{"n_ratings", 0}, {"n_items", session.items().size()}, {"iaa", nullptr},
                             {"iaa_omitted", true}, {"means", nullptr}});
        return;
      }
      send_json(res, 200,
                report_to_json(build_report(ratings, session.items().size(), options.binarization_threshold)));
    });

    server.Get("/api/rubric", [this](const httplib::Request&, httplib::Response& res) {
      res.status = 200;
      res.set_content(options.rubric, "text/plain; charset=utf-8");
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string msg = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        msg = e.what();
      } catch (...) {
      }
      send_json(res, 500, {{"error", "internal"}, {"message", msg}});
    });

    if (options.ui_dir) {
      if (!server.set_mount_point("/", options.ui_dir->string())) {
        throw IoError("UI directory not found: " + options.ui_dir->string());
      }
    }
  }
};

ReviewServer::ReviewServer(ReviewSession& session, ServerOptions options)
    : impl_(std::make_unique<Impl>(session, std::move(options))) {}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ReviewServer::listen() { impl_->server.listen_after_bind(); }

void ReviewServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace clinitext::review
