#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "clinitext/review_service.hpp"

namespace clinitext::review {

struct ServerOptions {
  std::string rubric{default_rubric()};
  std::optional<std::filesystem::path> ui_dir;  // static files mounted at "/"
  int binarization_threshold = metrics::kDefaultBinarizationThreshold;
};

// HTTP+JSON front end over a ReviewSession:
//   GET  /api/items?rater_id=R   pending items for R
//   POST /api/ratings            200 ack | 400 validation | 404 unknown item
//   GET  /api/report             ReviewReport
//   GET  /api/rubric             rubric text
class ReviewServer {
 public:
  ReviewServer(ReviewSession& session, ServerOptions options = {});
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  // Binds host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks serving requests until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace clinitext::review
