#include "srrg/corpus.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "srrg/error.hpp"
#include "srrg/text_util.hpp"

namespace srrg {

namespace fs = std::filesystem;

namespace {

constexpr const char* kStudiesFile = "studies.jsonl";
constexpr const char* kUtterancesFile = "utterances.jsonl";
constexpr const char* kReviewsFile = "reviews.jsonl";
constexpr const char* kIndexFile = "index.json";

[[noreturn]] void throw_errno(const std::string& what) {
  throw Error(ErrorCode::kIoError, what + ": " + std::strerror(errno));
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_all(int fd, std::string_view data, const std::string& what) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("write " + what);
    }
    data.remove_prefix(static_cast<size_t>(n));
  }
}

int open_log(const std::string& path) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + path);
  return fd;
}

void fsync_dir(const std::string& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

// Writes `data` to `path` atomically: temp file, fsync, rename.
void replace_file(const std::string& dir, const std::string& name, std::string_view data) {
  const std::string path = dir + "/" + name;
  const std::string tmp = path + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw_errno("open " + tmp);
  try {
    write_all(fd, data, tmp);
    if (::fsync(fd) != 0) throw_errno("fsync " + tmp);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) throw_errno("rename " + tmp);
  fsync_dir(dir);
}

// Parses a log into rows. A final line without its newline is the remnant of
// an interrupted append and is cut off the file.
std::vector<nlohmann::json> load_log(const std::string& path) {
  std::vector<nlohmann::json> rows;
  if (!fs::exists(path)) return rows;
  std::string data = read_all(path);
  const size_t last_nl = data.rfind('\n');
  const size_t complete = last_nl == std::string::npos ? 0 : last_nl + 1;
  if (complete < data.size()) {
    if (::truncate(path.c_str(), static_cast<off_t>(complete)) != 0) throw_errno("truncate " + path);
    data.resize(complete);
  }
  size_t line_no = 0;
  for (auto line : split_lines(data)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kIoError,
                  path + ":" + std::to_string(line_no) + ": corrupt row: " + e.what());
    }
  }
  return rows;
}

std::string optional_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return {};
  if (!j[key].is_string()) throw Error(ErrorCode::kSchemaViolation, std::string(key) + " must be a string");
  return j[key].get<std::string>();
}

void validate_study(const Study& s) {
  if (trim(s.study_id).empty()) throw Error(ErrorCode::kSchemaViolation, "study_id is empty");
  if (s.structured_text && !trim(*s.structured_text).empty()) {
    auto parsed = parse_report(*s.structured_text, ParseMode::kLenient);
    if (!parsed.report) throw Error(ErrorCode::kSchemaViolation, "structured_text does not parse");
  }
}

Study study_from_fields(const std::map<std::string, std::string>& fields) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : fields) {
    if ((k == "structured_text" || k == "split") && v.empty()) continue;
    j[k] = v;
  }
  return study_from_json(j);
}

}  // namespace

std::string utc_now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidate: return "validate";
    case Split::kTest: return "test";
    case Split::kTestReviewed: return "test_reviewed";
  }
  return "unknown";
}

std::optional<Split> split_from_name(std::string_view name) {
  std::string key = to_lower(trim(name));
  for (char& c : key) {
    if (c == ' ' || c == '-') c = '_';
  }
  if (key == "train") return Split::kTrain;
  if (key == "validate" || key == "validation") return Split::kValidate;
  if (key == "test") return Split::kTest;
  if (key == "test_reviewed" || key == "testreviewed") return Split::kTestReviewed;
  return std::nullopt;
}

nlohmann::json study_to_json(const Study& s) {
  nlohmann::json j = {{"study_id", s.study_id}, {"source", s.source}, {"original_text", s.original_text}};
  if (s.structured_text) j["structured_text"] = *s.structured_text;
  if (s.split) j["split"] = split_name(*s.split);
  return j;
}

Study study_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchemaViolation, "study row must be an object");
  Study s;
  if (!j.contains("study_id") || !j["study_id"].is_string()) {
    throw Error(ErrorCode::kSchemaViolation, "study_id is required and must be a string");
  }
  s.study_id = j["study_id"].get<std::string>();
  if (!j.contains("original_text") || !j["original_text"].is_string()) {
    throw Error(ErrorCode::kSchemaViolation, "original_text is required and must be a string");
  }
  s.original_text = j["original_text"].get<std::string>();
  s.source = optional_string(j, "source");
  // A blank structured_text means the study has not been structured yet.
  if (j.contains("structured_text") && !j["structured_text"].is_null()) {
    std::string text = optional_string(j, "structured_text");
    if (!trim(text).empty()) s.structured_text = std::move(text);
  }
  if (j.contains("split") && !j["split"].is_null()) {
    const std::string name = optional_string(j, "split");
    s.split = split_from_name(name);
    if (!s.split) throw Error(ErrorCode::kSchemaViolation, "unknown split: " + name);
  }
  validate_study(s);
  return s;
}

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kConsensus: return "consensus";
    case Provenance::kReviewed: return "reviewed";
    case Provenance::kBaseline: return "baseline";
    case Provenance::kExternal: return "external";
  }
  return "unknown";
}

std::optional<Provenance> provenance_from_name(std::string_view name) {
  const std::string key = to_lower(trim(name));
  for (auto p : {Provenance::kConsensus, Provenance::kReviewed, Provenance::kBaseline,
                 Provenance::kExternal}) {
    if (provenance_name(p) == key) return p;
  }
  return std::nullopt;
}

nlohmann::json utterance_record_to_json(const UtteranceRecord& r) {
  nlohmann::json j = {{"study_id", r.study_id}, {"origin", origin_to_json(r.origin)}, {"text", r.text}};
  if (r.labels) j["labels"] = labels_to_json(*r.labels);
  if (r.provenance) j["provenance"] = provenance_name(*r.provenance);
  return j;
}

UtteranceRecord utterance_record_from_json(const nlohmann::json& j) {
  UtteranceRecord r;
  try {
    r.study_id = j.at("study_id").get<std::string>();
    r.origin = origin_from_json(j.at("origin"));
    r.text = j.value("text", "");
    if (j.contains("labels") && !j["labels"].is_null()) r.labels = labels_from_json(j["labels"]);
    if (j.contains("provenance") && !j["provenance"].is_null()) {
      r.provenance = provenance_from_name(j["provenance"].get<std::string>());
      if (!r.provenance) throw Error(ErrorCode::kSchemaViolation, "unknown provenance");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("utterance row: ") + e.what());
  }
  return r;
}

nlohmann::json review_to_json(const ReviewRecord& r) {
  nlohmann::json corrections = nlohmann::json::array();
  for (const auto& c : r.label_corrections) {
    corrections.push_back({{"utterance_key", c.utterance_key}, {"labels", labels_to_json(c.labels)}});
  }
  return {{"study_id", r.study_id},     {"reviewer", r.reviewer},
          {"edited_text", r.edited_text}, {"label_corrections", corrections},
          {"version", r.version},        {"created_at", r.created_at},
          {"updated_at", r.updated_at}};
}

ReviewRecord review_from_json(const nlohmann::json& j) {
  ReviewRecord r;
  try {
    r.study_id = j.at("study_id").get<std::string>();
    r.reviewer = j.value("reviewer", "");
    r.edited_text = j.at("edited_text").get<std::string>();
    if (j.contains("label_corrections")) {
      for (const auto& c : j.at("label_corrections")) {
        r.label_corrections.push_back(
            {c.at("utterance_key").get<std::string>(), labels_from_json(c.at("labels"))});
      }
    }
    r.version = j.value("version", 0);
    r.created_at = j.value("created_at", "");
    r.updated_at = j.value("updated_at", "");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("review: ") + e.what());
  }
  return r;
}

std::vector<CsvRecord> parse_csv(std::string_view text) {
  std::vector<CsvRecord> out;
  CsvRecord rec;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  size_t line = 1;
  rec.line = 1;
  auto end_field = [&] {
    rec.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&](size_t next_line) {
    end_field();
    // A lone empty field is a blank line, not a record.
    if (!(rec.fields.size() == 1 && rec.fields[0].empty())) out.push_back(std::move(rec));
    rec = CsvRecord{};
    rec.line = next_line;
  };
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      continue;
    } else if (c == '\n') {
      ++line;
      end_record(line);
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw Error(ErrorCode::kSchemaViolation, "unterminated quoted field");
  if (field_started || !rec.fields.empty()) end_record(line);
  return out;
}

std::pair<std::vector<Study>, std::vector<RowError>> read_study_rows(std::string_view text,
                                                                    ImportFormat format) {
  std::vector<Study> rows;
  std::vector<RowError> errors;
  if (format == ImportFormat::kJsonl) {
    size_t line_no = 0;
    for (auto line : split_lines(text)) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        rows.push_back(study_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        errors.push_back({line_no, std::string("invalid JSON: ") + e.what()});
      } catch (const Error& e) {
        errors.push_back({line_no, e.what()});
      }
    }
    return {rows, errors};
  }
  std::vector<CsvRecord> records;
  try {
    records = parse_csv(text);
  } catch (const Error& e) {
    errors.push_back({0, e.what()});
    return {rows, errors};
  }
  if (records.empty()) return {rows, errors};
  const auto& header = records.front().fields;
  for (size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.size()) {
      errors.push_back({rec.line, "expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(rec.fields.size())});
      continue;
    }
    std::map<std::string, std::string> fields;
    for (size_t k = 0; k < header.size(); ++k) fields[std::string(trim(header[k]))] = rec.fields[k];
    try {
      rows.push_back(study_from_fields(fields));
    } catch (const Error& e) {
      errors.push_back({rec.line, e.what()});
    }
  }
  return {rows, errors};
}

CorpusStore::CorpusStore(std::string dir) : dir_(std::move(dir)) {}

std::unique_ptr<CorpusStore> CorpusStore::open(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create corpus directory " + dir + ": " + ec.message());
  std::unique_ptr<CorpusStore> store(new CorpusStore(dir));
  store->load();
  store->studies_fd_ = open_log(dir + "/" + kStudiesFile);
  store->utterances_fd_ = open_log(dir + "/" + kUtterancesFile);
  store->reviews_fd_ = open_log(dir + "/" + kReviewsFile);
  fsync_dir(dir);
  store->writer_ = std::thread([s = store.get()] { s->run_writer(); });
  return store;
}

CorpusStore::~CorpusStore() {
  {
    std::lock_guard<std::mutex> lock(queue_mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  if (writer_.joinable()) writer_.join();
  for (int fd : {studies_fd_, utterances_fd_, reviews_fd_}) {
    if (fd >= 0) ::close(fd);
  }
}

void CorpusStore::load() {
  for (const auto& row : load_log(dir_ + "/" + kStudiesFile)) {
    Study s = study_from_json(row);
    studies_[s.study_id] = std::move(s);
  }
  for (const auto& row : load_log(dir_ + "/" + kUtterancesFile)) {
    UtteranceRecord r = utterance_record_from_json(row);
    utterances_[r.key()] = std::move(r);
  }
  for (const auto& row : load_log(dir_ + "/" + kReviewsFile)) {
    ReviewRecord r = review_from_json(row);
    reviews_[r.study_id] = std::move(r);
  }
}

void CorpusStore::run_writer() {
  for (;;) {
    std::packaged_task<void()> task;
    {
      std::unique_lock<std::mutex> lock(queue_mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stopping with nothing left to flush
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

void CorpusStore::submit(std::function<void()> op) {
  std::packaged_task<void()> task(std::move(op));
  auto done = task.get_future();
  {
    std::lock_guard<std::mutex> lock(queue_mu_);
    if (stopping_) throw Error(ErrorCode::kIoError, "store is shutting down");
    queue_.push_back(std::move(task));
  }
  queue_cv_.notify_one();
  done.get();
}

void CorpusStore::append(int fd, const std::vector<std::string>& lines) {
  if (lines.empty()) return;
  std::string buf;
  for (const auto& l : lines) {
    buf += l;
    buf.push_back('\n');
  }
  write_all(fd, buf, dir_);
  if (::fsync(fd) != 0) throw_errno("fsync");
}

std::optional<Study> CorpusStore::study(const std::string& id) const {
  std::shared_lock lock(state_mu_);
  auto it = studies_.find(id);
  if (it == studies_.end()) return std::nullopt;
  return it->second;
}

std::vector<Study> CorpusStore::studies() const {
  std::shared_lock lock(state_mu_);
  std::vector<Study> out;
  out.reserve(studies_.size());
  for (const auto& [id, s] : studies_) out.push_back(s);
  return out;
}

std::vector<UtteranceRecord> CorpusStore::utterances(const std::string& study_id) const {
  std::shared_lock lock(state_mu_);
  std::vector<UtteranceRecord> out;
  for (auto it = utterances_.lower_bound(study_id + "#");
       it != utterances_.end() && it->second.study_id == study_id; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<UtteranceRecord> CorpusStore::all_utterances() const {
  std::shared_lock lock(state_mu_);
  std::vector<UtteranceRecord> out;
  out.reserve(utterances_.size());
  for (const auto& [k, r] : utterances_) out.push_back(r);
  return out;
}

std::optional<ReviewRecord> CorpusStore::review(const std::string& study_id) const {
  std::shared_lock lock(state_mu_);
  auto it = reviews_.find(study_id);
  if (it == reviews_.end()) return std::nullopt;
  return it->second;
}

std::vector<ReviewRecord> CorpusStore::reviews() const {
  std::shared_lock lock(state_mu_);
  std::vector<ReviewRecord> out;
  out.reserve(reviews_.size());
  for (const auto& [id, r] : reviews_) out.push_back(r);
  return out;
}

int CorpusStore::review_version(const std::string& study_id) const {
  std::shared_lock lock(state_mu_);
  auto it = reviews_.find(study_id);
  return it == reviews_.end() ? 0 : it->second.version;
}

ImportResult CorpusStore::import_studies(const std::string& path, ImportFormat format) {
  if (!fs::exists(path)) throw Error(ErrorCode::kFileNotFound, "no such file: " + path);
  return import_text(read_all(path), format);
}

ImportResult CorpusStore::import_text(std::string_view text, ImportFormat format) {
  auto [rows, errors] = read_study_rows(text, format);
  ImportResult result;
  result.imported = rows.size();
  result.errors = std::move(errors);
  upsert_studies(rows);
  return result;
}

void CorpusStore::upsert_studies(const std::vector<Study>& rows) {
  if (rows.empty()) return;
  submit([&] {
    std::vector<Study> merged;
    std::vector<std::string> lines;
    {
      std::shared_lock lock(state_mu_);
      std::map<std::string, Study> pending;
      for (const auto& row : rows) {
        Study s = row;
        if (!s.split) {
          if (auto p = pending.find(s.study_id); p != pending.end()) {
            s.split = p->second.split;
          } else if (auto it = studies_.find(s.study_id); it != studies_.end()) {
            s.split = it->second.split;
          }
        }
        pending[s.study_id] = s;
        merged.push_back(s);
        lines.push_back(study_to_json(s).dump());
      }
    }
    append(studies_fd_, lines);
    std::unique_lock lock(state_mu_);
    for (auto& s : merged) studies_[s.study_id] = std::move(s);
  });
}

void CorpusStore::assign_splits(const std::map<std::string, Split>& manifest) {
  if (manifest.empty()) return;
  submit([&] {
    std::vector<Study> updated;
    std::vector<std::string> lines;
    {
      std::shared_lock lock(state_mu_);
      for (const auto& [id, split] : manifest) {
        auto it = studies_.find(id);
        if (it == studies_.end()) throw Error(ErrorCode::kUnknownStudy, "unknown study: " + id);
        Study s = it->second;
        s.split = split;
        lines.push_back(study_to_json(s).dump());
        updated.push_back(std::move(s));
      }
    }
    append(studies_fd_, lines);
    std::unique_lock lock(state_mu_);
    for (auto& s : updated) studies_[s.study_id] = std::move(s);
  });
}

void CorpusStore::upsert_utterances(const std::vector<UtteranceRecord>& records) {
  if (records.empty()) return;
  submit([&] {
    std::vector<std::string> lines;
    for (const auto& r : records) lines.push_back(utterance_record_to_json(r).dump());
    append(utterances_fd_, lines);
    std::unique_lock lock(state_mu_);
    for (const auto& r : records) utterances_[r.key()] = r;
  });
}

int CorpusStore::save_review(ReviewRecord record, int expected_version, const Taxonomy& taxonomy) {
  const auto parsed = parse_report(record.edited_text, ParseMode::kLenient);
  if (!parsed.report || !parsed.issues.empty()) {
    std::string msg = "edited text does not parse";
    if (!parsed.issues.empty()) {
      const auto& i = parsed.issues.front();
      msg += ": line " + std::to_string(i.line) + ": " + std::string(parse_issue_name(i.code));
    }
    throw Error(ErrorCode::kUnparsableEdit, msg);
  }
  const std::string prefix = record.study_id + "#";
  for (auto& c : record.label_corrections) {
    if (c.utterance_key.rfind(prefix, 0) != 0) {
      throw Error(ErrorCode::kSchemaViolation,
                  "correction key " + c.utterance_key + " does not belong to " + record.study_id);
    }
    try {
      c.labels = normalize_labels(c.labels, taxonomy);
    } catch (const Error& e) {
      throw Error(ErrorCode::kSchemaViolation, e.what());
    }
  }
  int new_version = 0;
  submit([&] {
    {
      std::shared_lock lock(state_mu_);
      if (!studies_.count(record.study_id)) {
        throw Error(ErrorCode::kUnknownStudy, "unknown study: " + record.study_id);
      }
      auto it = reviews_.find(record.study_id);
      const int current = it == reviews_.end() ? 0 : it->second.version;
      if (current != expected_version) {
        throw Error(ErrorCode::kVersionConflict,
                    "expected version " + std::to_string(expected_version) + " but current is " +
                        std::to_string(current));
      }
      record.version = current + 1;
      record.updated_at = utc_now_iso();
      record.created_at = it == reviews_.end() ? record.updated_at : it->second.created_at;
    }
    append(reviews_fd_, {review_to_json(record).dump()});
    std::unique_lock lock(state_mu_);
    new_version = record.version;
    reviews_[record.study_id] = record;
  });
  return new_version;
}

void CorpusStore::compact() {
  submit([&] {
    std::string studies, utterances, reviews;
    nlohmann::json index;
    {
      std::shared_lock lock(state_mu_);
      std::map<std::string, size_t> split_counts;
      for (const auto& [id, s] : studies_) {
        studies += study_to_json(s).dump() + "\n";
        split_counts[s.split ? std::string(split_name(*s.split)) : "unassigned"]++;
      }
      for (const auto& [k, r] : utterances_) utterances += utterance_record_to_json(r).dump() + "\n";
      for (const auto& [id, r] : reviews_) reviews += review_to_json(r).dump() + "\n";
      index = {{"studies", studies_.size()},
               {"utterances", utterances_.size()},
               {"reviews", reviews_.size()},
               {"splits", split_counts},
               {"compacted_at", utc_now_iso()}};
    }
    for (int* fd : {&studies_fd_, &utterances_fd_, &reviews_fd_}) {
      ::close(*fd);
      *fd = -1;
    }
    replace_file(dir_, kStudiesFile, studies);
    replace_file(dir_, kUtterancesFile, utterances);
    replace_file(dir_, kReviewsFile, reviews);
    replace_file(dir_, kIndexFile, index.dump(2) + "\n");
    studies_fd_ = open_log(dir_ + "/" + kStudiesFile);
    utterances_fd_ = open_log(dir_ + "/" + kUtterancesFile);
    reviews_fd_ = open_log(dir_ + "/" + kReviewsFile);
  });
}

std::string CorpusStore::export_studies() const {
  std::string out;
  for (const auto& s : studies()) out += study_to_json(s).dump() + "\n";
  return out;
}

}  // namespace srrg
