#include "srrg/service.hpp"

#include <fstream>
#include <sstream>

#include "httplib.h"
#include "srrg/error.hpp"
#include "srrg/review.hpp"
#include "srrg/text_util.hpp"

namespace srrg {

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownStudy:
    case ErrorCode::kEmptyInput:
      return 404;
    case ErrorCode::kVersionConflict:
      return 409;
    case ErrorCode::kUnparsableEdit:
      return 422;
    case ErrorCode::kSchemaViolation:
    case ErrorCode::kUnknownDisease:
    case ErrorCode::kUnknownStatus:
    case ErrorCode::kParseFailed:
      return 400;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::kSchemaViolation, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("invalid JSON body: ") + e.what());
  }
}

}  // namespace

std::map<std::string, std::string> load_tokens(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open token file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::map<std::string, std::string> tokens;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      for (const auto& [token, reviewer] : nlohmann::json::parse(text).items()) {
        tokens[token] = reviewer.get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, path + ": " + e.what());
    }
    return tokens;
  }
  for (auto line : split_lines(text)) {
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const size_t sp = line.find_first_of(" \t");
    if (sp == std::string_view::npos) {
      throw Error(ErrorCode::kSchemaViolation, path + ": expected '<token> <reviewer>'");
    }
    tokens[std::string(line.substr(0, sp))] = std::string(trim(line.substr(sp)));
  }
  return tokens;
}

ReviewService::ReviewService(CorpusStore& store, const Taxonomy& taxonomy, std::string taxonomy_json,
                             ServiceConfig config)
    : store_(store),
      taxonomy_(taxonomy),
      taxonomy_json_(std::move(taxonomy_json)),
      config_(std::move(config)),
      server_(std::make_unique<httplib::Server>()) {
  if (!config_.token_file.empty()) tokens_ = load_tokens(config_.token_file);
  // httplib defaults to SO_REUSEPORT, which lets a second server share the
  // port silently. Plain SO_REUSEADDR keeps restarts fast and bind honest.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  install_routes();
}

ReviewService::~ReviewService() = default;

int ReviewService::bind() {
  int port = config_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.host);
  } else if (!server_->bind_to_port(config_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::kIoError,
                "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  return port;
}

void ReviewService::run() { server_->listen_after_bind(); }

void ReviewService::stop() { server_->stop(); }

std::optional<std::string> ReviewService::next_task(const std::string& reviewer) {
  const auto now = std::chrono::steady_clock::now();
  std::lock_guard<std::mutex> lock(lease_mu_);
  for (const auto& study : store_.studies()) {
    if (config_.task_split && study.split != config_.task_split) continue;
    if (store_.review_version(study.study_id) > 0) continue;
    auto it = leases_.find(study.study_id);
    if (it != leases_.end() && it->second.expires > now) continue;
    leases_[study.study_id] = {reviewer, now + config_.lease};
    return study.study_id;
  }
  return std::nullopt;
}

void ReviewService::install_routes() {
  auto& svr = *server_;
  svr.set_default_headers({{"X-SRRG-Api", "1"},
                           {"Access-Control-Allow-Origin", "*"},
                           {"Access-Control-Allow-Headers", "Authorization, Content-Type"},
                           {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});

  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    } catch (...) {
      send_error(res, 500, "Internal", "unknown error");
    }
  });

  svr.Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  // Resolves the caller; returns false after writing a 401.
  auto authorize = [this](const httplib::Request& req, httplib::Response& res,
                          std::string& reviewer) {
    if (tokens_.empty()) return true;
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (header.rfind(kBearer, 0) == 0) {
      auto it = tokens_.find(std::string(trim(std::string_view(header).substr(kBearer.size()))));
      if (it != tokens_.end()) {
        reviewer = it->second;
        return true;
      }
    }
    send_error(res, 401, "Unauthorized", "missing or invalid bearer token");
    return false;
  };

  svr.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  svr.Get("/tasks/next", [this, authorize](const httplib::Request& req, httplib::Response& res) {
    std::string reviewer;
    if (!authorize(req, res, reviewer)) return;
    if (reviewer.empty()) reviewer = req.get_param_value("reviewer");
    if (reviewer.empty()) {
      send_error(res, 400, "SchemaViolation", "reviewer query parameter is required");
      return;
    }
    auto id = next_task(reviewer);
    if (!id) {
      send_error(res, 404, "NoTasks", "no unreviewed studies available");
      return;
    }
    auto study = store_.study(*id);
    nlohmann::json task = review_task_json(store_, *study);
    task["reviewer"] = reviewer;
    task["lease_seconds"] = config_.lease.count();
    send_json(res, 200, task);
  });

  svr.Post(R"(/studies/([^/]+)/review)", [this, authorize](const httplib::Request& req,
                                                          httplib::Response& res) {
    std::string reviewer;
    if (!authorize(req, res, reviewer)) return;
    const std::string id = req.matches[1];
    const auto body = parse_body(req);
    ReviewRecord record;
    record.study_id = id;
    try {
      record.edited_text = body.at("edited_text").get<std::string>();
      if (reviewer.empty()) reviewer = body.value("reviewer", "anonymous");
      if (body.contains("label_corrections")) {
        for (const auto& c : body.at("label_corrections")) {
          record.label_corrections.push_back(
              {c.at("utterance_key").get<std::string>(), labels_from_json(c.at("labels"))});
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, std::string("invalid review body: ") + e.what());
    }
    record.reviewer = reviewer;
    const int expected = body.value("expected_version", 0);
    if (!store_.study(id)) throw Error(ErrorCode::kUnknownStudy, "unknown study: " + id);
    const int version = store_.save_review(record, expected, taxonomy_);
    {
      std::lock_guard<std::mutex> lock(lease_mu_);
      leases_.erase(id);
    }
    nlohmann::json out = {{"study_id", id}, {"version", version}};
    out["diff"] = study_diff_json(store_, id);
    send_json(res, 200, out);
  });

  svr.Get(R"(/studies/([^/]+)/review)", [this, authorize](const httplib::Request& req,
                                                         httplib::Response& res) {
    std::string reviewer;
    if (!authorize(req, res, reviewer)) return;
    const std::string id = req.matches[1];
    if (!store_.study(id)) throw Error(ErrorCode::kUnknownStudy, "unknown study: " + id);
    auto review = store_.review(id);
    if (!review) throw Error(ErrorCode::kUnknownStudy, "study has no review: " + id);
    send_json(res, 200, review_to_json(*review));
  });

  svr.Get(R"(/studies/([^/]+)/diff)", [this, authorize](const httplib::Request& req,
                                                       httplib::Response& res) {
    std::string reviewer;
    if (!authorize(req, res, reviewer)) return;
    send_json(res, 200, study_diff_json(store_, req.matches[1]));
  });

  svr.Get("/summary", [this, authorize](const httplib::Request& req, httplib::Response& res) {
    std::string reviewer;
    if (!authorize(req, res, reviewer)) return;
    send_json(res, 200, summary_json(store_));
  });

  svr.Get("/taxonomy", [this, authorize](const httplib::Request& req, httplib::Response& res) {
    std::string reviewer;
    if (!authorize(req, res, reviewer)) return;
    res.status = 200;
    res.set_content(taxonomy_json_, "application/json");
  });

  // Live validation for the editor.
  svr.Post("/parse", [this, authorize](const httplib::Request& req, httplib::Response& res) {
    std::string reviewer;
    if (!authorize(req, res, reviewer)) return;
    const auto body = parse_body(req);
    if (!body.contains("text") || !body["text"].is_string()) {
      throw Error(ErrorCode::kSchemaViolation, "text is required");
    }
    const auto parsed = parse_report(body["text"].get<std::string>(), ParseMode::kLenient);
    nlohmann::json issues = nlohmann::json::array();
    for (const auto& i : parsed.issues) issues.push_back(issue_to_json(i));
    nlohmann::json out = {{"ok", parsed.report.has_value() && parsed.issues.empty()},
                          {"issues", issues}};
    if (parsed.report) {
      nlohmann::json violations = nlohmann::json::array();
      for (const auto& v : validate_desiderata(*parsed.report)) violations.push_back(violation_to_json(v));
      out["violations"] = violations;
      out["report"] = report_to_json(*parsed.report);
    }
    send_json(res, 200, out);
  });
}

}  // namespace srrg
