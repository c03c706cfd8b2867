#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "srrg/corpus.hpp"
#include "srrg/taxonomy.hpp"

namespace httplib {
class Server;
}

namespace srrg {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // Bearer tokens: JSON object {"<token>": "<reviewer>"} or lines
  // "<token> <reviewer>". Empty disables authentication.
  std::string token_file;
  std::chrono::seconds lease{30 * 60};
  // Studies handed out by /tasks/next. Unset means every study.
  std::optional<Split> task_split = Split::kTestReviewed;
};

std::map<std::string, std::string> load_tokens(const std::string& path);

// HTTP API for the reader study. Every response is JSON and carries
// X-SRRG-Api: 1. Errors are {"error": {"code", "message"}}.
class ReviewService {
 public:
  ReviewService(CorpusStore& store, const Taxonomy& taxonomy, std::string taxonomy_json,
                ServiceConfig config);
  ~ReviewService();

  // Binds the listening socket and returns the port; IoError on failure.
  int bind();
  // Serves until stop() is called. Requires a prior bind().
  void run();
  void stop();

 private:
  struct Lease {
    std::string reviewer;
    std::chrono::steady_clock::time_point expires;
  };

  void install_routes();
  std::optional<std::string> next_task(const std::string& reviewer);

  CorpusStore& store_;
  const Taxonomy& taxonomy_;
  std::string taxonomy_json_;
  ServiceConfig config_;
  std::map<std::string, std::string> tokens_;
  std::unique_ptr<httplib::Server> server_;
  std::mutex lease_mu_;
  std::map<std::string, Lease> leases_;
};

}  // namespace srrg
