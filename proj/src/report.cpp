#include "srrg/report.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

#include "srrg/error.hpp"
#include "srrg/text_util.hpp"

namespace srrg {

namespace {

constexpr std::array<std::string_view, 6> kSectionHeaders = {
    "Exam Type", "History", "Technique", "Comparison", "Findings", "Impression"};

constexpr std::array<std::string_view, 8> kCategoryHeaders = {
    "Lungs and Airways",
    "Pleura",
    "Cardiovascular",
    "Hila and Mediastinum",
    "Tubes, Catheters, and Support Devices",
    "Musculoskeletal and Chest Wall",
    "Abdominal",
    "Other",
};

bool is_free_text(SectionKind kind) {
  return kind != SectionKind::kFindings && kind != SectionKind::kImpression;
}

// "Word Word:" with nothing after the colon, short, no sentence punctuation.
bool is_header_shaped(std::string_view trimmed) {
  if (trimmed.size() < 2 || trimmed.back() != ':') return false;
  std::string_view body = trim(trimmed.substr(0, trimmed.size() - 1));
  if (body.empty() || body.size() > 60) return false;
  if (!std::isalpha(static_cast<unsigned char>(body.front()))) return false;
  if (!std::isupper(static_cast<unsigned char>(body.front()))) return false;
  int words = 1;
  for (char c : body) {
    if (c == ':' || c == '.' || c == ';' || c == '?' || c == '!') return false;
    if (c == ' ') ++words;
  }
  return words <= 6;
}

// Recognizes "<Section Header>:<rest>" at column 0.
std::optional<std::pair<SectionKind, std::string_view>> match_section_line(std::string_view line) {
  for (size_t i = 0; i < kSectionHeaders.size(); ++i) {
    const auto header = kSectionHeaders[i];
    if (line.size() > header.size() && line.substr(0, header.size()) == header &&
        line[header.size()] == ':') {
      return std::make_pair(static_cast<SectionKind>(i), trim(line.substr(header.size() + 1)));
    }
  }
  return std::nullopt;
}

std::optional<AnatomicCategory> match_category_line(std::string_view trimmed) {
  if (trimmed.empty() || trimmed.back() != ':') return std::nullopt;
  return category_from_header(trim(trimmed.substr(0, trimmed.size() - 1)));
}

// Returns the item number and text for "<digits>. <text>".
std::optional<std::pair<long, std::string_view>> match_numbered(std::string_view trimmed) {
  size_t i = 0;
  while (i < trimmed.size() && std::isdigit(static_cast<unsigned char>(trimmed[i]))) ++i;
  if (i == 0 || i > 9 || i + 1 >= trimmed.size() || trimmed[i] != '.' || trimmed[i + 1] != ' ') {
    return std::nullopt;
  }
  std::string_view text = trim(trimmed.substr(i + 2));
  if (text.empty()) return std::nullopt;
  return std::make_pair(std::stol(std::string(trimmed.substr(0, i))), text);
}

// Strips one bullet marker. Strict mode knows only "- "; lenient mode also
// accepts "* " and the Unicode bullet.
std::optional<std::string_view> match_bullet(std::string_view trimmed, ParseMode mode) {
  if (trimmed.size() >= 2 && trimmed[0] == '-' && trimmed[1] == ' ') return trim(trimmed.substr(2));
  if (trimmed == "-") return std::string_view{};
  if (mode == ParseMode::kLenient) {
    if (trimmed.size() >= 2 && trimmed[0] == '*' && trimmed[1] == ' ') return trim(trimmed.substr(2));
    constexpr std::string_view kDot = "\xE2\x80\xA2";  // U+2022
    if (trimmed.substr(0, kDot.size()) == kDot) return trim(trimmed.substr(kDot.size()));
  }
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(ParseMode mode) : mode_(mode) {}

  ParseResult run(std::string_view text) {
    ParseResult result;
    if (trim(text).empty()) {
      result.issues.push_back({1, ParseIssueCode::kEmptyDocument, "document is empty"});
      return result;
    }
    const auto lines = split_lines(text);
    for (size_t i = 0; i < lines.size(); ++i) {
      line_no_ = static_cast<int>(i) + 1;
      handle(lines[i]);
    }
    finish_impression();
    result.issues = std::move(issues_);
    if (mode_ == ParseMode::kLenient || result.issues.empty()) result.report = std::move(report_);
    return result;
  }

 private:
  enum class Last { kNone, kFreeText, kBullet, kItem };

  void issue(ParseIssueCode code, std::string message) {
    issues_.push_back({line_no_, code, std::move(message)});
  }

  void handle(std::string_view raw) {
    const std::string_view line = trim(raw);
    if (line.empty()) return;

    if (auto hit = match_section_line(raw)) {
      open_section(hit->first, hit->second);
      return;
    }
    if (auto kind = section_from_header(line)) {
      issue(ParseIssueCode::kMissingColon, "section header without colon: " + std::string(line));
      if (mode_ == ParseMode::kLenient) open_section(*kind, {});
      return;
    }
    if (!section_) {
      if (is_header_shaped(line)) {
        issue(ParseIssueCode::kUnknownSectionHeader, "unknown section header: " + std::string(line));
      } else {
        issue(ParseIssueCode::kMalformedLine, "text outside any section");
      }
      return;
    }
    switch (*section_) {
      case SectionKind::kFindings:
        findings_line(raw, line);
        break;
      case SectionKind::kImpression:
        impression_line(raw, line);
        break;
      default:
        free_text_line(line);
        break;
    }
  }

  void open_section(SectionKind kind, std::string_view rest) {
    if (!seen_sections_.insert(kind).second) {
      issue(ParseIssueCode::kDuplicateSection,
            "duplicate section: " + std::string(section_header(kind)));
    }
    section_ = kind;
    skipping_ = false;
    category_.reset();
    last_ = Last::kNone;
    if (is_free_text(kind)) {
      auto& slot = report_.free_text(kind);
      if (!slot) slot = std::string();
      if (!rest.empty()) append_free_text(rest);
      return;
    }
    if (kind == SectionKind::kFindings) {
      report_.has_findings_section = true;
      if (!rest.empty()) issue(ParseIssueCode::kMalformedLine, "text on the Findings header line");
      return;
    }
    report_.has_impression_section = true;
    if (!rest.empty()) impression_line(rest, rest);
  }

  void append_free_text(std::string_view line) {
    auto& slot = report_.free_text(*section_);
    if (!slot->empty()) slot->push_back('\n');
    slot->append(line);
    last_ = Last::kFreeText;
  }

  void free_text_line(std::string_view line) {
    if (is_header_shaped(line)) {
      issue(ParseIssueCode::kUnknownSectionHeader, "unknown section header: " + std::string(line));
      skipping_ = true;
      return;
    }
    if (skipping_) return;
    append_free_text(line);
  }

  CategoryFindings& open_category(AnatomicCategory category, bool report_duplicate) {
    for (auto& group : report_.findings) {
      if (group.category == category) {
        if (report_duplicate) {
          issue(ParseIssueCode::kDuplicateCategory,
                "duplicate category: " + std::string(category_header(category)));
        }
        category_ = category;
        return group;
      }
    }
    report_.findings.push_back({category, {}});
    category_ = category;
    return report_.findings.back();
  }

  CategoryFindings& current_group() {
    for (auto& group : report_.findings) {
      if (group.category == *category_) return group;
    }
    return open_category(*category_, false);
  }

  void add_observation(std::string_view text) {
    if (text.empty()) {
      issue(ParseIssueCode::kMalformedLine, "empty bullet");
      return;
    }
    if (text.substr(0, 2) == "- ") {
      if (mode_ == ParseMode::kStrict) {
        issue(ParseIssueCode::kMalformedLine, "nested bullet marker");
        return;
      }
      while (text.substr(0, 2) == "- ") text = trim(text.substr(2));
      if (text.empty()) return;
    }
    current_group().observations.push_back({std::string(text)});
    last_ = Last::kBullet;
  }

  void findings_line(std::string_view raw, std::string_view line) {
    if (auto category = match_category_line(line)) {
      open_category(*category, true);
      last_ = Last::kNone;
      return;
    }
    if (auto category = category_from_header(line)) {
      issue(ParseIssueCode::kMissingColon, "category header without colon: " + std::string(line));
      if (mode_ == ParseMode::kLenient) open_category(*category, false);
      last_ = Last::kNone;
      return;
    }
    if (auto bullet = match_bullet(line, mode_)) {
      if (!category_) {
        issue(ParseIssueCode::kBulletOutsideCategory, "bullet before any anatomical header");
        if (mode_ == ParseMode::kStrict) return;
        open_category(AnatomicCategory::kOther, false);
      }
      add_observation(*bullet);
      return;
    }
    if (last_ == Last::kBullet && starts_with_space(raw)) {
      auto& text = current_group().observations.back().text;
      text.push_back(' ');
      text.append(line);
      return;
    }
    if (is_header_shaped(line)) {
      issue(ParseIssueCode::kUnknownAnatomicHeader,
            "unknown anatomical header: " + std::string(line));
      if (mode_ == ParseMode::kLenient) open_category(AnatomicCategory::kOther, false);
      last_ = Last::kNone;
      return;
    }
    issue(ParseIssueCode::kMalformedLine, "findings line is not a bullet");
    if (mode_ == ParseMode::kLenient && category_) add_observation(line);
  }

  void impression_line(std::string_view raw, std::string_view line) {
    if (auto item = match_numbered(line)) {
      numbers_.push_back({item->first, line_no_});
      report_.impression.push_back({0, std::string(item->second)});
      last_ = Last::kItem;
      return;
    }
    if (last_ == Last::kItem && starts_with_space(raw)) {
      auto& text = report_.impression.back().text;
      text.push_back(' ');
      text.append(line);
      return;
    }
    if (is_header_shaped(line)) {
      issue(ParseIssueCode::kUnknownSectionHeader, "unknown section header: " + std::string(line));
      return;
    }
    issue(ParseIssueCode::kMalformedLine, "impression line is not a numbered item");
    if (mode_ == ParseMode::kStrict) return;
    if (auto bullet = match_bullet(line, mode_); bullet && !bullet->empty()) {
      numbers_.push_back({static_cast<long>(numbers_.size()) + 1, line_no_});
      report_.impression.push_back({0, std::string(*bullet)});
      last_ = Last::kItem;
    } else if (!report_.impression.empty()) {
      auto& text = report_.impression.back().text;
      text.push_back(' ');
      text.append(line);
    } else {
      numbers_.push_back({1, line_no_});
      report_.impression.push_back({0, std::string(line)});
      last_ = Last::kItem;
    }
  }

  void finish_impression() {
    for (size_t i = 0; i < numbers_.size(); ++i) {
      if (numbers_[i].first != static_cast<long>(i) + 1) {
        issues_.push_back({numbers_[i].second, ParseIssueCode::kNonConsecutiveImpressionNumbers,
                           "expected item " + std::to_string(i + 1) + ", found " +
                               std::to_string(numbers_[i].first)});
        break;
      }
    }
    for (size_t i = 0; i < report_.impression.size(); ++i) {
      report_.impression[i].rank = static_cast<int>(i) + 1;
    }
  }

  ParseMode mode_;
  StructuredReport report_;
  std::vector<ParseIssue> issues_;
  std::set<SectionKind> seen_sections_;
  std::optional<SectionKind> section_;
  std::optional<AnatomicCategory> category_;
  std::vector<std::pair<long, int>> numbers_;
  Last last_ = Last::kNone;
  bool skipping_ = false;
  int line_no_ = 0;
};

std::vector<CategoryFindings> canonical_findings(const StructuredReport& r) {
  auto sorted = r.findings;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.category < b.category; });
  return sorted;
}

bool has_date(const std::string& text) {
  static const std::regex kSlashDate(R"((^|[^\d])\d{1,2}/\d{1,2}/\d{2,4}($|[^\d]))");
  static const std::regex kIsoDate(R"((^|[^\d])\d{4}-\d{2}-\d{2}($|[^\d]))");
  return std::regex_search(text, kSlashDate) || std::regex_search(text, kIsoDate);
}

}  // namespace

std::string_view section_header(SectionKind kind) {
  return kSectionHeaders.at(static_cast<size_t>(kind));
}

std::string_view category_header(AnatomicCategory category) {
  return kCategoryHeaders.at(static_cast<size_t>(category));
}

std::optional<SectionKind> section_from_header(std::string_view header) {
  for (size_t i = 0; i < kSectionHeaders.size(); ++i) {
    if (kSectionHeaders[i] == header) return static_cast<SectionKind>(i);
  }
  return std::nullopt;
}

std::optional<AnatomicCategory> category_from_header(std::string_view header) {
  for (size_t i = 0; i < kCategoryHeaders.size(); ++i) {
    if (kCategoryHeaders[i] == header) return static_cast<AnatomicCategory>(i);
  }
  return std::nullopt;
}

const std::optional<std::string>& StructuredReport::free_text(SectionKind kind) const {
  switch (kind) {
    case SectionKind::kExamType: return exam_type;
    case SectionKind::kHistory: return history;
    case SectionKind::kTechnique: return technique;
    case SectionKind::kComparison: return comparison;
    default: break;
  }
  throw std::invalid_argument("not a free-text section");
}

std::optional<std::string>& StructuredReport::free_text(SectionKind kind) {
  return const_cast<std::optional<std::string>&>(std::as_const(*this).free_text(kind));
}

const CategoryFindings* StructuredReport::category(AnatomicCategory category) const {
  for (const auto& group : findings) {
    if (group.category == category) return &group;
  }
  return nullptr;
}

bool operator==(const StructuredReport& a, const StructuredReport& b) {
  return a.exam_type == b.exam_type && a.history == b.history && a.technique == b.technique &&
         a.comparison == b.comparison && a.has_findings() == b.has_findings() &&
         a.has_impression() == b.has_impression() && a.impression == b.impression &&
         canonical_findings(a) == canonical_findings(b);
}

std::string_view parse_issue_name(ParseIssueCode code) {
  switch (code) {
    case ParseIssueCode::kUnknownSectionHeader: return "UnknownSectionHeader";
    case ParseIssueCode::kUnknownAnatomicHeader: return "UnknownAnatomicHeader";
    case ParseIssueCode::kMissingColon: return "MissingColon";
    case ParseIssueCode::kBulletOutsideCategory: return "BulletOutsideCategory";
    case ParseIssueCode::kNonConsecutiveImpressionNumbers: return "NonConsecutiveImpressionNumbers";
    case ParseIssueCode::kEmptyDocument: return "EmptyDocument";
    case ParseIssueCode::kDuplicateSection: return "DuplicateSection";
    case ParseIssueCode::kDuplicateCategory: return "DuplicateCategory";
    case ParseIssueCode::kMalformedLine: return "MalformedLine";
  }
  return "Unknown";
}

ParseResult parse_report(std::string_view text, ParseMode mode) { return Parser(mode).run(text); }

std::string render_report(const StructuredReport& report) {
  std::vector<std::string> out;
  for (SectionKind kind : kAllSections) {
    const std::string header(section_header(kind));
    if (is_free_text(kind)) {
      const auto& text = report.free_text(kind);
      if (!text) continue;
      const auto lines = split_lines(*text);
      if (lines.empty()) {
        out.push_back(header + ":");
        continue;
      }
      out.push_back(header + ": " + std::string(lines.front()));
      for (size_t i = 1; i < lines.size(); ++i) out.emplace_back(lines[i]);
    } else if (kind == SectionKind::kFindings) {
      if (!report.has_findings()) continue;
      out.push_back(header + ":");
      for (const auto& group : canonical_findings(report)) {
        out.push_back(std::string(category_header(group.category)) + ":");
        for (const auto& obs : group.observations) out.push_back("- " + obs.text);
      }
    } else {
      if (!report.has_impression()) continue;
      out.push_back(header + ":");
      for (const auto& item : report.impression) {
        out.push_back(std::to_string(item.rank) + ". " + item.text);
      }
    }
  }
  return join(out, "\n");
}

std::vector<std::string> check_report(const StructuredReport& report) {
  std::vector<std::string> problems;
  auto check_line = [&](std::string_view what, std::string_view text) {
    if (text.empty()) problems.push_back(std::string(what) + ": empty text");
    else if (trim(text) != text) problems.push_back(std::string(what) + ": untrimmed text");
    if (text.find('\n') != std::string_view::npos) problems.push_back(std::string(what) + ": newline");
  };
  for (SectionKind kind : kAllSections) {
    if (!is_free_text(kind)) continue;
    const auto& text = report.free_text(kind);
    if (!text || text->empty()) continue;
    const std::string where(section_header(kind));
    for (auto line : split_lines(*text)) {
      if (line.empty() || trim(line) != line) problems.push_back(where + ": blank or untrimmed line");
      if (match_section_line(line) || section_from_header(line) || is_header_shaped(line)) {
        problems.push_back(where + ": line reads as a header");
      }
    }
  }
  std::set<AnatomicCategory> seen;
  for (const auto& group : report.findings) {
    const std::string where(category_header(group.category));
    if (!seen.insert(group.category).second) problems.push_back(where + ": duplicate category");
    if (group.observations.empty()) problems.push_back(where + ": no observations");
    for (const auto& obs : group.observations) {
      check_line(where, obs.text);
      if (obs.text.substr(0, 2) == "- ") problems.push_back(where + ": bullet marker in text");
    }
  }
  for (size_t i = 0; i < report.impression.size(); ++i) {
    const auto& item = report.impression[i];
    if (item.rank != static_cast<int>(i) + 1) problems.push_back("Impression: ranks not 1..N");
    check_line("Impression", item.text);
  }
  return problems;
}

std::string_view violation_name(ViolationCode code) {
  switch (code) {
    case ViolationCode::kImpressionNumbering: return "ImpressionNumbering";
    case ViolationCode::kNonCanonicalHeader: return "NonCanonicalHeader";
    case ViolationCode::kIdentifierLeak: return "IdentifierLeak";
    case ViolationCode::kHistoricalComparison: return "HistoricalComparison";
    case ViolationCode::kEmptyFindings: return "EmptyFindings";
  }
  return "Unknown";
}

std::vector<Violation> validate_desiderata(const StructuredReport& report,
                                           const DesiderataConfig& config) {
  std::vector<Violation> out;

  auto scan_identifiers = [&](const std::string& location, const std::string& text) {
    if (has_date(text)) {
      out.push_back({ViolationCode::kIdentifierLeak, location, "date-like token"});
    }
    const std::string lower = to_lower(text);
    for (const auto& term : config.identifier_lexicon) {
      if (contains_phrase(lower, to_lower(term))) {
        out.push_back({ViolationCode::kIdentifierLeak, location, "identifier term: " + term});
      }
    }
  };
  auto scan_comparisons = [&](const std::string& location, const std::string& text) {
    const std::string lower = to_lower(text);
    for (const auto& phrase : config.comparison_phrases) {
      if (contains_phrase(lower, phrase)) {
        out.push_back({ViolationCode::kHistoricalComparison, location,
                       "reference to a prior study: " + phrase});
        break;
      }
    }
  };

  for (SectionKind kind : kAllSections) {
    if (!is_free_text(kind)) continue;
    if (const auto& text = report.free_text(kind)) {
      scan_identifiers(std::string(section_header(kind)), *text);
    }
  }

  if (report.has_findings_section && report.findings.empty()) {
    out.push_back({ViolationCode::kEmptyFindings, "Findings", "Findings header with no categories"});
  }
  std::set<AnatomicCategory> seen;
  for (const auto& group : report.findings) {
    const auto raw = static_cast<size_t>(group.category);
    if (raw >= kCategoryHeaders.size()) {
      out.push_back({ViolationCode::kNonCanonicalHeader, "Findings", "category outside the header list"});
      continue;
    }
    const std::string where = "Findings/" + std::string(category_header(group.category));
    if (!seen.insert(group.category).second) {
      out.push_back({ViolationCode::kNonCanonicalHeader, where, "category repeated"});
    }
    for (size_t i = 0; i < group.observations.size(); ++i) {
      const std::string loc = where + " " + std::to_string(i + 1);
      scan_identifiers(loc, group.observations[i].text);
      scan_comparisons(loc, group.observations[i].text);
    }
  }

  for (size_t i = 0; i < report.impression.size(); ++i) {
    const auto& item = report.impression[i];
    const std::string loc = "Impression " + std::to_string(i + 1);
    if (item.rank != static_cast<int>(i) + 1) {
      out.push_back({ViolationCode::kImpressionNumbering, loc,
                     "rank " + std::to_string(item.rank) + " at position " + std::to_string(i + 1)});
    }
    scan_identifiers(loc, item.text);
    scan_comparisons(loc, item.text);
  }
  return out;
}

std::string origin_key(const UtteranceOrigin& origin) {
  if (origin.kind == UtteranceOrigin::Kind::kImpression) {
    return "impression/" + std::to_string(origin.index);
  }
  return "findings/" + std::string(category_header(origin.category)) + "/" +
         std::to_string(origin.index);
}

std::string Utterance::key() const { return study_id + "#" + origin_key(origin); }

std::vector<Utterance> extract_utterances(const StructuredReport& report,
                                          std::string_view study_id) {
  std::vector<Utterance> out;
  for (const auto& group : report.findings) {
    for (size_t i = 0; i < group.observations.size(); ++i) {
      out.push_back({group.observations[i].text,
                     UtteranceOrigin::finding(group.category, static_cast<int>(i) + 1),
                     std::string(study_id)});
    }
  }
  for (const auto& item : report.impression) {
    out.push_back({item.text, UtteranceOrigin::impression_rank(item.rank), std::string(study_id)});
  }
  return out;
}

nlohmann::json report_to_json(const StructuredReport& report) {
  nlohmann::json j = nlohmann::json::object();
  if (report.exam_type) j["exam_type"] = *report.exam_type;
  if (report.history) j["history"] = *report.history;
  if (report.technique) j["technique"] = *report.technique;
  if (report.comparison) j["comparison"] = *report.comparison;
  if (report.has_findings()) {
    nlohmann::json findings = nlohmann::json::object();
    for (const auto& group : report.findings) {
      auto& list = findings[std::string(category_header(group.category))];
      list = nlohmann::json::array();
      for (const auto& obs : group.observations) list.push_back(obs.text);
    }
    j["findings"] = std::move(findings);
  }
  if (report.has_impression()) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& item : report.impression) items.push_back(item.text);
    j["impression"] = std::move(items);
  }
  return j;
}

StructuredReport report_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchemaViolation, "report JSON must be an object");
  StructuredReport report;
  auto text_field = [&](const char* key, std::optional<std::string>& slot) {
    if (j.contains(key) && !j.at(key).is_null()) slot = j.at(key).get<std::string>();
  };
  text_field("exam_type", report.exam_type);
  text_field("history", report.history);
  text_field("technique", report.technique);
  text_field("comparison", report.comparison);
  if (j.contains("findings") && !j.at("findings").is_null()) {
    report.has_findings_section = true;
    for (const auto& [header, list] : j.at("findings").items()) {
      auto category = category_from_header(header);
      if (!category) throw Error(ErrorCode::kSchemaViolation, "unknown anatomical header: " + header);
      CategoryFindings group{*category, {}};
      for (const auto& text : list) group.observations.push_back({text.get<std::string>()});
      report.findings.push_back(std::move(group));
    }
    std::stable_sort(report.findings.begin(), report.findings.end(),
                     [](const auto& a, const auto& b) { return a.category < b.category; });
  }
  if (j.contains("impression") && !j.at("impression").is_null()) {
    report.has_impression_section = true;
    int rank = 1;
    for (const auto& text : j.at("impression")) {
      report.impression.push_back({rank++, text.get<std::string>()});
    }
  }
  return report;
}

nlohmann::json origin_to_json(const UtteranceOrigin& origin) {
  nlohmann::json j;
  if (origin.kind == UtteranceOrigin::Kind::kImpression) {
    j["kind"] = "impression";
  } else {
    j["kind"] = "finding";
    j["category"] = std::string(category_header(origin.category));
  }
  j["index"] = origin.index;
  return j;
}

UtteranceOrigin origin_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("index")) {
    throw Error(ErrorCode::kSchemaViolation, "origin needs kind and index");
  }
  const auto kind = j.at("kind").get<std::string>();
  const int index = j.at("index").get<int>();
  if (index < 1) throw Error(ErrorCode::kSchemaViolation, "origin index must be >= 1");
  if (kind == "impression") return UtteranceOrigin::impression_rank(index);
  if (kind == "finding" || kind == "findings") {
    const auto header = j.value("category", std::string());
    auto category = category_from_header(header);
    if (!category) throw Error(ErrorCode::kSchemaViolation, "unknown anatomical header: " + header);
    return UtteranceOrigin::finding(*category, index);
  }
  throw Error(ErrorCode::kSchemaViolation, "unknown origin kind: " + kind);
}

nlohmann::json issue_to_json(const ParseIssue& issue) {
  return {{"line", issue.line}, {"code", parse_issue_name(issue.code)}, {"message", issue.message}};
}

nlohmann::json violation_to_json(const Violation& violation) {
  return {{"code", violation_name(violation.code)},
          {"location", violation.location},
          {"message", violation.message}};
}

}  // namespace srrg
