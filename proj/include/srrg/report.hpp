#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace srrg {

enum class SectionKind { kExamType, kHistory, kTechnique, kComparison, kFindings, kImpression };

inline constexpr std::array<SectionKind, 6> kAllSections = {
    SectionKind::kExamType,   SectionKind::kHistory,  SectionKind::kTechnique,
    SectionKind::kComparison, SectionKind::kFindings, SectionKind::kImpression};

// The eight organ-system headers allowed under Findings, in canonical order.
enum class AnatomicCategory {
  kLungsAndAirways,
  kPleura,
  kCardiovascular,
  kHilaAndMediastinum,
  kTubesCathetersAndSupportDevices,
  kMusculoskeletalAndChestWall,
  kAbdominal,
  kOther,
};

inline constexpr std::array<AnatomicCategory, 8> kAllCategories = {
    AnatomicCategory::kLungsAndAirways,
    AnatomicCategory::kPleura,
    AnatomicCategory::kCardiovascular,
    AnatomicCategory::kHilaAndMediastinum,
    AnatomicCategory::kTubesCathetersAndSupportDevices,
    AnatomicCategory::kMusculoskeletalAndChestWall,
    AnatomicCategory::kAbdominal,
    AnatomicCategory::kOther,
};

std::string_view section_header(SectionKind kind);
std::string_view category_header(AnatomicCategory category);
std::optional<SectionKind> section_from_header(std::string_view header);
std::optional<AnatomicCategory> category_from_header(std::string_view header);

struct Observation {
  std::string text;
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ImpressionItem {
  int rank = 0;
  std::string text;
  friend bool operator==(const ImpressionItem&, const ImpressionItem&) = default;
};

struct CategoryFindings {
  AnatomicCategory category;
  std::vector<Observation> observations;
  friend bool operator==(const CategoryFindings&, const CategoryFindings&) = default;
};

// A parsed structured report. `findings` keeps source order after parsing;
// rendering always emits the canonical category order. Equality ignores
// category order since both orders describe the same report.
struct StructuredReport {
  std::optional<std::string> exam_type;
  std::optional<std::string> history;
  std::optional<std::string> technique;
  std::optional<std::string> comparison;
  // Set when a "Findings:" header was present, even with no categories.
  bool has_findings_section = false;
  std::vector<CategoryFindings> findings;
  bool has_impression_section = false;
  std::vector<ImpressionItem> impression;

  const std::optional<std::string>& free_text(SectionKind kind) const;
  std::optional<std::string>& free_text(SectionKind kind);

  // nullptr when the category is absent.
  const CategoryFindings* category(AnatomicCategory category) const;

  bool has_findings() const { return has_findings_section || !findings.empty(); }
  bool has_impression() const { return has_impression_section || !impression.empty(); }

  friend bool operator==(const StructuredReport& a, const StructuredReport& b);
};

enum class ParseMode { kStrict, kLenient };

enum class ParseIssueCode {
  kUnknownSectionHeader,
  kUnknownAnatomicHeader,
  kMissingColon,
  kBulletOutsideCategory,
  kNonConsecutiveImpressionNumbers,
  kEmptyDocument,
  kDuplicateSection,
  kDuplicateCategory,
  kMalformedLine,
};

std::string_view parse_issue_name(ParseIssueCode code);

struct ParseIssue {
  int line = 0;  // 1-based
  ParseIssueCode code;
  std::string message;
};

struct ParseResult {
  // Strict mode: set only when `issues` is empty. Lenient mode: best effort,
  // unset only for an empty document.
  std::optional<StructuredReport> report;
  std::vector<ParseIssue> issues;

  bool ok() const { return report.has_value() && issues.empty(); }
};

ParseResult parse_report(std::string_view text, ParseMode mode = ParseMode::kStrict);

// Canonical plain-text form. The report must satisfy check_report().
std::string render_report(const StructuredReport& report);

// Structural invariants the renderer relies on; empty when well formed.
std::vector<std::string> check_report(const StructuredReport& report);

enum class ViolationCode {
  kImpressionNumbering,
  kNonCanonicalHeader,
  kIdentifierLeak,
  kHistoricalComparison,
  kEmptyFindings,
};

std::string_view violation_name(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::string location;  // e.g. "Impression 2", "Findings/Pleura 1", "History"
  std::string message;
};

struct DesiderataConfig {
  // Lowercase phrases matched on word boundaries.
  std::vector<std::string> identifier_lexicon;
  std::vector<std::string> comparison_phrases = {
      "compared to prior", "compared with prior", "again seen", "again noted",
      "unchanged from", "previously seen", "since the prior", "since prior",
      "from prior study", "from the prior", "interval change", "interval increase",
      "interval decrease", "as before"};
};

// Advisory content checks. Empty result means compliant.
std::vector<Violation> validate_desiderata(const StructuredReport& report,
                                           const DesiderataConfig& config = {});

struct UtteranceOrigin {
  enum class Kind { kFinding, kImpression };
  Kind kind = Kind::kFinding;
  AnatomicCategory category = AnatomicCategory::kOther;  // findings only
  int index = 0;  // 1-based bullet index, or impression rank

  static UtteranceOrigin finding(AnatomicCategory category, int index) {
    return {Kind::kFinding, category, index};
  }
  static UtteranceOrigin impression_rank(int rank) {
    return {Kind::kImpression, AnatomicCategory::kOther, rank};
  }

  friend bool operator==(const UtteranceOrigin& a, const UtteranceOrigin& b) {
    if (a.kind != b.kind || a.index != b.index) return false;
    return a.kind == Kind::kImpression || a.category == b.category;
  }
};

// "findings/Pleura/2" or "impression/1".
std::string origin_key(const UtteranceOrigin& origin);

struct Utterance {
  std::string text;
  UtteranceOrigin origin;
  std::string study_id;

  // study_id + "#" + origin_key(origin); unique within a corpus.
  std::string key() const;
};

// Findings bullets in document order, then impression items by rank.
std::vector<Utterance> extract_utterances(const StructuredReport& report,
                                          std::string_view study_id = {});

nlohmann::json report_to_json(const StructuredReport& report);
StructuredReport report_from_json(const nlohmann::json& j);

nlohmann::json origin_to_json(const UtteranceOrigin& origin);
UtteranceOrigin origin_from_json(const nlohmann::json& j);

nlohmann::json issue_to_json(const ParseIssue& issue);
nlohmann::json violation_to_json(const Violation& violation);

}  // namespace srrg
