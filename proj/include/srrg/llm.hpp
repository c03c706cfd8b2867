#pragma once

#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "srrg/report.hpp"

namespace srrg {

// Hex-encoded SHA-256, used to key recorded completions.
std::string sha256_hex(std::string_view data);

// Text completion backend. Implementations must tolerate concurrent calls.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

// Serves completions from a JSON-lines recording of
// {"prompt_hash", "response"} rows. A hash recorded several times (one row
// per voter) is answered in file order, cycling once exhausted.
class ReplayClient : public LlmClient {
 public:
  static std::unique_ptr<ReplayClient> from_file(const std::string& path);
  static std::unique_ptr<ReplayClient> from_jsonl(std::string_view text);

  std::string complete(const std::string& prompt) override;

 private:
  struct Entry {
    std::vector<std::string> responses;
    size_t next = 0;
  };
  std::mutex mu_;
  std::map<std::string, Entry> entries_;
};

// Forwards to another client and appends every exchange to a JSON-lines file
// in the format ReplayClient reads.
class RecordingClient : public LlmClient {
 public:
  RecordingClient(LlmClient& inner, const std::string& path);

  std::string complete(const std::string& prompt) override;

 private:
  LlmClient& inner_;
  std::mutex mu_;
  std::ofstream out_;
};

struct HttpLlmConfig {
  std::string base_url = "https://api.openai.com";
  std::string path = "/v1/chat/completions";
  std::string model = "gpt-4-1106-preview";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
  double temperature = 0.0;
};

HttpLlmConfig http_llm_config_from_json(const nlohmann::json& j);

// OpenAI-compatible chat completions endpoint.
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmConfig config);

  std::string complete(const std::string& prompt) override;

 private:
  HttpLlmConfig config_;
  std::string api_key_;
};

std::string build_structuring_prompt(std::string_view free_text_report);

struct RestructureResult {
  std::string text;  // last raw completion
  ParseResult parse;
  std::vector<Violation> violations;
  int attempts = 0;

  bool ok() const { return parse.ok() && violations.empty(); }
};

// Prompt, complete, parse leniently and validate. When the first answer has
// parse issues or violations, one retry is made with the problems listed.
RestructureResult restructure(std::string_view report_text, LlmClient& client,
                              const DesiderataConfig& config = {});

}  // namespace srrg
