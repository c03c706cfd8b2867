#include "srrg/llm.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "httplib.h"
#include "prompts.hpp"
#include "srrg/error.hpp"
#include "srrg/text_util.hpp"

namespace srrg {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "sha256 failed");
  }
  std::string out;
  out.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    out.append(buf, 2);
  }
  return out;
}

std::unique_ptr<ReplayClient> ReplayClient::from_jsonl(std::string_view text) {
  auto client = std::make_unique<ReplayClient>();
  int line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json row;
    try {
      row = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation,
                  "recording line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!row.is_object() || !row.contains("prompt_hash") || !row.contains("response") ||
        !row["prompt_hash"].is_string() || !row["response"].is_string()) {
      throw Error(ErrorCode::kSchemaViolation,
                  "recording line " + std::to_string(line_no) + ": expected prompt_hash and response");
    }
    client->entries_[row["prompt_hash"].get<std::string>()].responses.push_back(
        row["response"].get<std::string>());
  }
  return client;
}

std::unique_ptr<ReplayClient> ReplayClient::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open recording: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_jsonl(ss.str());
}

std::string ReplayClient::complete(const std::string& prompt) {
  const std::string hash = sha256_hex(prompt);
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) {
    throw Error(ErrorCode::kLlmFailure, "no recorded completion for prompt " + hash);
  }
  auto& entry = it->second;
  const std::string& response = entry.responses[entry.next % entry.responses.size()];
  ++entry.next;
  return response;
}

RecordingClient::RecordingClient(LlmClient& inner, const std::string& path)
    : inner_(inner), out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw Error(ErrorCode::kIoError, "cannot open recording for append: " + path);
}

std::string RecordingClient::complete(const std::string& prompt) {
  std::string response = inner_.complete(prompt);
  nlohmann::json row = {{"prompt_hash", sha256_hex(prompt)}, {"response", response}};
  std::lock_guard<std::mutex> lock(mu_);
  out_ << row.dump() << '\n';
  out_.flush();
  return response;
}

HttpLlmConfig http_llm_config_from_json(const nlohmann::json& j) {
  HttpLlmConfig c;
  if (!j.is_object()) throw Error(ErrorCode::kSchemaViolation, "llm config must be an object");
  c.base_url = j.value("base_url", c.base_url);
  c.path = j.value("path", c.path);
  c.model = j.value("model", c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.temperature = j.value("temperature", c.temperature);
  return c;
}

HttpLlmClient::HttpLlmClient(HttpLlmConfig config) : config_(std::move(config)) {
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
}

std::string HttpLlmClient::complete(const std::string& prompt) {
  // httplib clients are not thread safe; one per call keeps this reentrant.
  httplib::Client cli(config_.base_url);
  cli.set_connection_timeout(config_.timeout_seconds, 0);
  cli.set_read_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  nlohmann::json body = {
      {"model", config_.model},
      {"temperature", config_.temperature},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  auto res = cli.Post(config_.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kLlmFailure, "llm request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kLlmFailure,
                "llm endpoint returned " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kLlmFailure, std::string("unexpected llm response: ") + e.what());
  }
}

std::string build_structuring_prompt(std::string_view free_text_report) {
  if (trim(free_text_report).empty()) throw Error(ErrorCode::kEmptyInput, "empty report");
  std::string out(prompts::kStructuringPrefix);
  out.append(free_text_report);
  return out;
}

namespace {

std::string strip_fences(const std::string& text) {
  std::string out;
  for (auto line : split_lines(text)) {
    if (trim(line).rfind("```", 0) == 0) continue;
    out.append(line);
    out.push_back('\n');
  }
  return out;
}

std::string problem_list(const RestructureResult& r) {
  std::string out;
  for (const auto& issue : r.parse.issues) {
    out += "- line " + std::to_string(issue.line) + ": " +
           std::string(parse_issue_name(issue.code)) + ": " + issue.message + "\n";
  }
  for (const auto& v : r.violations) {
    out += "- " + v.location + ": " + std::string(violation_name(v.code)) + ": " + v.message + "\n";
  }
  return out;
}

}  // namespace

RestructureResult restructure(std::string_view report_text, LlmClient& client,
                              const DesiderataConfig& config) {
  const std::string base_prompt = build_structuring_prompt(report_text);
  std::string prompt = base_prompt;
  RestructureResult result;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    result.attempts = attempt;
    result.text = strip_fences(client.complete(prompt));
    result.parse = parse_report(result.text, ParseMode::kLenient);
    result.violations.clear();
    if (result.parse.report) result.violations = validate_desiderata(*result.parse.report, config);
    if (result.ok()) break;
    prompt = base_prompt + "\n\nYour previous answer was:\n" + result.text +
             "\nIt has the following problems:\n" + problem_list(result) +
             "Return only the corrected structured report.";
  }
  return result;
}

}  // namespace srrg
