#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "srrg/report.hpp"
#include "srrg/taxonomy.hpp"

namespace srrg {

enum class Split { kTrain, kValidate, kTest, kTestReviewed };

std::string_view split_name(Split split);
// Accepts "train", "validate", "test", "test_reviewed" (case and the
// separator between "test" and "reviewed" are forgiven).
std::optional<Split> split_from_name(std::string_view name);

struct Study {
  std::string study_id;
  std::string source;
  std::string original_text;
  std::optional<std::string> structured_text;
  std::optional<Split> split;

  // Text reviewers start from: the structured text when present.
  const std::string& review_base() const {
    return structured_text ? *structured_text : original_text;
  }
};

nlohmann::json study_to_json(const Study& study);
Study study_from_json(const nlohmann::json& j);

enum class Provenance { kConsensus, kReviewed, kBaseline, kExternal };

std::string_view provenance_name(Provenance p);
std::optional<Provenance> provenance_from_name(std::string_view name);

struct UtteranceRecord {
  std::string study_id;
  UtteranceOrigin origin;
  std::string text;
  std::optional<LabelSet> labels;
  std::optional<Provenance> provenance;

  std::string key() const { return study_id + "#" + origin_key(origin); }
};

nlohmann::json utterance_record_to_json(const UtteranceRecord& r);
UtteranceRecord utterance_record_from_json(const nlohmann::json& j);

struct LabelCorrection {
  std::string utterance_key;
  LabelSet labels;
};

struct ReviewRecord {
  std::string study_id;
  std::string reviewer;
  std::string edited_text;
  std::vector<LabelCorrection> label_corrections;
  std::string created_at;  // ISO 8601 UTC
  std::string updated_at;
  int version = 0;
};

nlohmann::json review_to_json(const ReviewRecord& r);
ReviewRecord review_from_json(const nlohmann::json& j);

enum class ImportFormat { kJsonl, kCsv };

struct RowError {
  size_t line = 0;  // 1-based line where the row starts
  std::string message;
};

struct ImportResult {
  size_t imported = 0;  // valid rows applied
  std::vector<RowError> errors;
};

// RFC 4180 records. Each record carries the 1-based line where it starts.
struct CsvRecord {
  size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRecord> parse_csv(std::string_view text);

// Rows of a study file, valid ones returned and invalid ones reported.
std::pair<std::vector<Study>, std::vector<RowError>> read_study_rows(std::string_view text,
                                                                    ImportFormat format);

// Directory-backed store: studies.jsonl, utterances.jsonl and reviews.jsonl
// are append logs where the last row for a key wins; index.json is written by
// compact(). All writes run on one writer thread and are fsynced before the
// call returns. Reads are served from memory and may run concurrently.
class CorpusStore {
 public:
  // Creates the directory when missing. A torn final line left by a crash is
  // dropped; corruption elsewhere raises IoError.
  static std::unique_ptr<CorpusStore> open(const std::string& dir);
  ~CorpusStore();

  CorpusStore(const CorpusStore&) = delete;
  CorpusStore& operator=(const CorpusStore&) = delete;

  const std::string& dir() const { return dir_; }

  std::optional<Study> study(const std::string& id) const;
  std::vector<Study> studies() const;  // sorted by study_id
  std::vector<UtteranceRecord> utterances(const std::string& study_id) const;
  std::vector<UtteranceRecord> all_utterances() const;  // sorted by key
  std::optional<ReviewRecord> review(const std::string& study_id) const;
  std::vector<ReviewRecord> reviews() const;  // sorted by study_id
  int review_version(const std::string& study_id) const;

  // Upserts by study_id. A row without a split keeps the stored split.
  ImportResult import_studies(const std::string& path, ImportFormat format);
  ImportResult import_text(std::string_view text, ImportFormat format);
  void upsert_studies(const std::vector<Study>& studies);

  void assign_splits(const std::map<std::string, Split>& manifest);

  void upsert_utterances(const std::vector<UtteranceRecord>& records);

  // Stores the review iff `expected_version` equals the current version and
  // returns the new version. The edited text must parse leniently without
  // issues; corrected diseases must exist in `taxonomy`.
  int save_review(ReviewRecord record, int expected_version,
                  const Taxonomy& taxonomy = Taxonomy::bundled());

  // Rewrites each log with one row per key and writes index.json.
  void compact();

  // Studies as JSON lines sorted by study_id.
  std::string export_studies() const;

 private:
  explicit CorpusStore(std::string dir);

  void load();
  void run_writer();
  // Runs `op` on the writer thread and waits for it.
  void submit(std::function<void()> op);
  void append(int fd, const std::vector<std::string>& lines);

  std::string dir_;
  int studies_fd_ = -1;
  int utterances_fd_ = -1;
  int reviews_fd_ = -1;

  mutable std::shared_mutex state_mu_;
  std::map<std::string, Study> studies_;
  std::map<std::string, UtteranceRecord> utterances_;
  std::map<std::string, ReviewRecord> reviews_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<std::packaged_task<void()>> queue_;
  bool stopping_ = false;
  std::thread writer_;
};

std::string utc_now_iso();

}  // namespace srrg
