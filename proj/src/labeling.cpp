#include "srrg/labeling.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "bundled_data.hpp"
#include "prompts.hpp"
#include "srrg/error.hpp"
#include "srrg/text_util.hpp"

namespace srrg {

namespace {

const std::vector<std::string>& hedge_cues() {
  static const std::vector<std::string> kCues = {
      "may",      "might",         "possible",      "possibly",   "likely",
      "probable", "probably",      "cannot exclude", "cannot be excluded",
      "questionable", "suspicious for", "concerning for", "could"};
  return kCues;
}

const std::vector<std::string>& negation_cues() {
  static const std::vector<std::string> kCues = {"no", "without", "absent", "negative for",
                                                 "free of", "not"};
  return kCues;
}

bool has_any(const std::string& lower, const std::vector<std::string>& cues) {
  return std::any_of(cues.begin(), cues.end(),
                     [&](const std::string& c) { return contains_phrase(lower, c); });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Resolves a disease name to a taxonomy leaf or throws UnknownDisease.
std::string leaf_name(std::string_view name, const Taxonomy& taxonomy) {
  auto canonical = taxonomy.canonical_name(name);
  if (!canonical) throw Error(ErrorCode::kUnknownDisease, "unknown disease: " + std::string(name));
  if (!taxonomy.is_leaf(*canonical)) {
    throw Error(ErrorCode::kUnknownDisease, "not a selectable disease: " + *canonical);
  }
  return *canonical;
}

std::string line_ref(size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

GranularLabel parse_item(std::string_view item, const Taxonomy& taxonomy, size_t line_no) {
  item = trim(item);
  std::string_view name = item;
  std::optional<Status> status;
  if (!item.empty() && item.back() == ')') {
    const size_t open = item.rfind('(');
    if (open != std::string_view::npos) {
      const std::string_view word = trim(item.substr(open + 1, item.size() - open - 2));
      status = status_from_name(word);
      if (!status) {
        throw Error(ErrorCode::kUnknownStatus,
                    line_ref(line_no) + "unknown status: " + std::string(word));
      }
      name = trim(item.substr(0, open));
    }
  }
  std::string disease;
  try {
    disease = leaf_name(name, taxonomy);
  } catch (const Error& e) {
    throw Error(e.code(), line_ref(line_no) + e.what());
  }
  if (disease == kNoFinding) return {disease, Status::kPresent};
  if (!status) {
    throw Error(ErrorCode::kUnknownStatus, line_ref(line_no) + "missing status for " + disease);
  }
  return {disease, *status};
}

// Splits "1. A (Present) 2. B (Absent)" into item texts.
std::vector<std::string_view> split_items(std::string_view rhs) {
  static const std::regex kMarker(R"((^|\s)(\d+)\.\s)");
  std::vector<std::pair<size_t, size_t>> marks;  // (marker start, text start)
  const std::string s(rhs);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), kMarker); it != std::sregex_iterator();
       ++it) {
    const size_t start = static_cast<size_t>(it->position(2));
    marks.emplace_back(start, static_cast<size_t>(it->position(0) + it->length(0)));
  }
  std::vector<std::string_view> items;
  // Unnumbered answer: the whole right-hand side is one item.
  if (marks.empty()) {
    items.push_back(rhs);
    return items;
  }
  for (size_t k = 0; k < marks.size(); ++k) {
    const size_t end = k + 1 < marks.size() ? marks[k + 1].first : rhs.size();
    items.push_back(rhs.substr(marks[k].second, end - marks[k].second));
  }
  return items;
}

}  // namespace

std::string build_disease_prompt(const std::vector<std::string>& utterances,
                                 const Taxonomy& taxonomy) {
  if (utterances.empty()) throw Error(ErrorCode::kEmptyInput, "no utterances");
  std::string out(prompts::kDiseasePrefix);
  for (size_t i = 0; i < taxonomy.leaves().size(); ++i) {
    if (i) out.push_back('\n');
    out += "- " + taxonomy.leaves()[i];
  }
  out.append(prompts::kDiseaseSuffix);
  for (size_t i = 0; i < utterances.size(); ++i) {
    if (utterances[i].find_first_of("\r\n") != std::string::npos) {
      throw Error(ErrorCode::kNewlineInUtterance,
                  "utterance " + std::to_string(i + 1) + " contains a newline");
    }
    if (i) out.push_back('\n');
    out += utterances[i];
  }
  return out;
}

DiseaseResponse parse_disease_response(std::string_view text,
                                       const std::vector<std::string>& expected,
                                       const Taxonomy& taxonomy) {
  std::vector<std::pair<size_t, std::string_view>> lines;
  size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    auto t = trim(line);
    if (t.empty() || t.rfind("```", 0) == 0) continue;
    lines.emplace_back(line_no, t);
  }
  if (lines.size() != expected.size()) {
    throw Error(ErrorCode::kCountMismatch, "expected " + std::to_string(expected.size()) +
                                               " answer lines, got " + std::to_string(lines.size()));
  }
  DiseaseResponse out;
  out.labels.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    const size_t arrow = line.rfind("=>");
    if (arrow == std::string_view::npos) {
      throw Error(ErrorCode::kLineWithoutArrow, line_ref(no) + "missing \"=>\" separator");
    }
    const std::string echoed = to_lower(trim(line.substr(0, arrow)));
    const std::string want = to_lower(trim(expected[i]));
    const size_t n = std::min<size_t>({echoed.size(), want.size(), 24});
    if (echoed.compare(0, n, want, 0, n) != 0 || (echoed.empty() != want.empty())) {
      out.warnings.push_back(line_ref(no) + "echoed finding does not match utterance " +
                             std::to_string(i + 1));
    }
    LabelSet labels;
    const std::string_view rhs = trim(line.substr(arrow + 2));
    if (!rhs.empty()) {
      for (auto item : split_items(rhs)) labels.add(parse_item(item, taxonomy, no));
    }
    out.labels.push_back(std::move(labels));
  }
  return out;
}

std::string render_disease_response(const std::vector<std::string>& findings,
                                    const std::vector<LabelSet>& labels) {
  if (findings.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "findings and label lists differ in length");
  }
  std::string out;
  for (size_t i = 0; i < findings.size(); ++i) {
    if (i) out.push_back('\n');
    out += findings[i] + " =>";
    int n = 0;
    for (const auto& [disease, status] : labels[i]) {
      out += " " + std::to_string(++n) + ". " + disease;
      if (disease != kNoFinding) out += " (" + std::string(status_name(status)) + ")";
    }
  }
  return out;
}

LabelSet consensus(const std::vector<LabelSet>& votes) {
  if (votes.size() != 3) {
    throw Error(ErrorCode::kWrongVoterCount,
                "consensus needs exactly 3 votes, got " + std::to_string(votes.size()));
  }
  std::map<std::string, int> count;
  for (const auto& v : votes) {
    for (const auto& [disease, status] : v) ++count[disease];
  }
  LabelSet out;
  for (const auto& [disease, n] : count) {
    if (n < 2) continue;
    for (const auto& v : votes) {
      if (auto s = v.status_of(disease)) out.add(disease, *s);
    }
  }
  return out;
}

std::vector<std::pair<Utterance, LabelSet>> discard_unlabeled(
    std::vector<std::pair<Utterance, LabelSet>> records) {
  std::erase_if(records, [](const auto& r) { return r.second.empty(); });
  return records;
}

KeywordLabeler::KeywordLabeler(std::map<std::string, std::string> lexicon,
                               const Taxonomy& taxonomy) {
  if (lexicon.empty()) throw Error(ErrorCode::kEmptyLexicon, "keyword lexicon is empty");
  for (auto& [phrase, disease] : lexicon) {
    const std::string key(trim(phrase));
    if (key.empty()) throw Error(ErrorCode::kEmptyLexicon, "empty lexicon phrase");
    if (key != to_lower(key)) {
      throw Error(ErrorCode::kSchemaViolation, "lexicon phrase must be lowercase: " + key);
    }
    phrases_.emplace_back(key, leaf_name(disease, taxonomy));
  }
  std::stable_sort(phrases_.begin(), phrases_.end(), [](const auto& a, const auto& b) {
    return a.first.size() > b.first.size();
  });
}

KeywordLabeler KeywordLabeler::from_json(const nlohmann::json& j, const Taxonomy& taxonomy) {
  if (!j.is_object()) throw Error(ErrorCode::kSchemaViolation, "lexicon must be a JSON object");
  std::map<std::string, std::string> lexicon;
  for (const auto& [phrase, disease] : j.items()) {
    if (!disease.is_string()) {
      throw Error(ErrorCode::kSchemaViolation, "lexicon value for '" + phrase + "' is not a string");
    }
    lexicon[phrase] = disease.get<std::string>();
  }
  return KeywordLabeler(std::move(lexicon), taxonomy);
}

KeywordLabeler KeywordLabeler::bundled(const Taxonomy& taxonomy) {
  return from_json(nlohmann::json::parse(bundled::kKeywordLexiconJson), taxonomy);
}

KeywordLabeler KeywordLabeler::from_file(const std::string& path, const Taxonomy& taxonomy) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)), taxonomy);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, path + ": " + e.what());
  }
}

LabelSet KeywordLabeler::label_text(std::string_view text) const {
  const std::string lower = to_lower(text);
  // Claim spans longest phrase first so "tension pneumothorax" shadows
  // "pneumothorax" at the same position.
  std::vector<std::pair<size_t, size_t>> taken;
  std::vector<std::string> hits;
  for (const auto& [phrase, disease] : phrases_) {
    size_t pos = 0;
    while ((pos = lower.find(phrase, pos)) != std::string::npos) {
      const size_t end = pos + phrase.size();
      const bool bounded =
          (pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]))) &&
          (end == lower.size() || !std::isalnum(static_cast<unsigned char>(lower[end])));
      const bool free = std::none_of(taken.begin(), taken.end(), [&](const auto& span) {
        return pos < span.second && span.first < end;
      });
      if (bounded && free) {
        taken.emplace_back(pos, end);
        hits.push_back(disease);
      }
      pos = end;
    }
  }
  LabelSet out;
  if (hits.empty()) {
    out.add(std::string(kNoFinding), Status::kPresent);
    return out;
  }
  Status status = Status::kPresent;
  if (has_any(lower, hedge_cues())) {
    status = Status::kUncertain;
  } else if (has_any(lower, negation_cues())) {
    status = Status::kAbsent;
  }
  for (const auto& d : hits) out.add(d, status);
  return out;
}

std::vector<LabelSet> KeywordLabeler::label(const std::vector<Utterance>& utterances) const {
  std::vector<LabelSet> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) out.push_back(label_text(u.text));
  return out;
}

nlohmann::json prediction_row(const Utterance& utterance, const LabelSet& labels) {
  return {{"study_id", utterance.study_id},
          {"origin", origin_to_json(utterance.origin)},
          {"labels", labels_to_json(labels)}};
}

PredictionLabeler PredictionLabeler::from_jsonl(std::string_view text, const Taxonomy& taxonomy,
                                                const std::vector<std::string>& known_keys) {
  std::set<std::string> known(known_keys.begin(), known_keys.end());
  PredictionLabeler out;
  size_t line_no = 0;
  for (auto line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::string key;
    LabelSet labels;
    try {
      const auto row = nlohmann::json::parse(line);
      Utterance u;
      u.study_id = row.at("study_id").get<std::string>();
      u.origin = origin_from_json(row.at("origin"));
      key = u.key();
      labels = normalize_labels(labels_from_json(row.at("labels")), taxonomy);
      for (const auto& [disease, status] : labels) {
        if (!taxonomy.is_leaf(disease)) {
          throw Error(ErrorCode::kUnknownDisease, "not a leaf: " + disease);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, line_ref(line_no) + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnknownUtterance) throw;
      throw Error(ErrorCode::kSchemaViolation, line_ref(line_no) + e.what());
    }
    if (!known.empty() && !known.count(key)) {
      throw Error(ErrorCode::kUnknownUtterance, line_ref(line_no) + "unknown utterance " + key);
    }
    if (!out.rows_.emplace(key, std::move(labels)).second) {
      throw Error(ErrorCode::kSchemaViolation, line_ref(line_no) + "duplicate row for " + key);
    }
  }
  return out;
}

PredictionLabeler PredictionLabeler::from_file(const std::string& path, const Taxonomy& taxonomy,
                                               const std::vector<std::string>& known_keys) {
  return from_jsonl(read_file(path), taxonomy, known_keys);
}

std::vector<LabelSet> PredictionLabeler::label(const std::vector<Utterance>& utterances) const {
  std::vector<LabelSet> out;
  out.reserve(utterances.size());
  for (const auto& u : utterances) {
    auto it = rows_.find(u.key());
    if (it == rows_.end()) {
      throw Error(ErrorCode::kUnknownUtterance, "no prediction for utterance " + u.key());
    }
    out.push_back(it->second);
  }
  return out;
}

LlmLabeler::LlmLabeler(LlmClient& client, const Taxonomy& taxonomy, int voters, size_t batch_size)
    : client_(client), taxonomy_(taxonomy), voters_(voters), batch_size_(std::max<size_t>(batch_size, 1)) {
  if (voters != 1 && voters != 3) {
    throw Error(ErrorCode::kWrongVoterCount, "voters must be 1 or 3");
  }
}

std::vector<LabelSet> LlmLabeler::label(const std::vector<Utterance>& utterances) const {
  std::vector<LabelSet> out;
  out.reserve(utterances.size());
  size_t i = 0;
  while (i < utterances.size()) {
    size_t j = i;
    std::vector<std::string> texts;
    while (j < utterances.size() && texts.size() < batch_size_ &&
           utterances[j].study_id == utterances[i].study_id) {
      texts.push_back(utterances[j].text);
      ++j;
    }
    const std::string prompt = build_disease_prompt(texts, taxonomy_);
    std::vector<std::vector<LabelSet>> votes;
    for (int v = 0; v < voters_; ++v) {
      votes.push_back(parse_disease_response(client_.complete(prompt), texts, taxonomy_).labels);
    }
    for (size_t k = 0; k < texts.size(); ++k) {
      if (voters_ == 1) {
        out.push_back(votes[0][k]);
      } else {
        out.push_back(consensus({votes[0][k], votes[1][k], votes[2][k]}));
      }
    }
    i = j;
  }
  return out;
}

}  // namespace srrg
