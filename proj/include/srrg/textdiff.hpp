#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "srrg/taxonomy.hpp"

namespace srrg {

using TokenSeq = std::vector<std::string>;

// Splits on Unicode whitespace. Case and punctuation are kept as-is.
TokenSeq tokenize(std::string_view text);

struct MatchBlock {
  size_t a = 0;
  size_t b = 0;
  size_t size = 0;
  friend bool operator==(const MatchBlock&, const MatchBlock&) = default;
};

// Gestalt (Ratcliff/Obershelp) matching without junk heuristics: take the
// longest common block (earliest in a, then earliest in b), recurse on both
// sides. Adjacent blocks are merged and a zero-size sentinel at (|a|, |b|)
// terminates the list.
std::vector<MatchBlock> matching_blocks(const TokenSeq& a, const TokenSeq& b);

enum class OpKind { kEqual, kInsert, kDelete, kReplace };

std::string_view op_kind_name(OpKind kind);

struct Opcode {
  OpKind kind;
  size_t a_lo, a_hi, b_lo, b_hi;
};

std::vector<Opcode> opcodes(const TokenSeq& a, const TokenSeq& b);

struct DiffStats {
  size_t insertions = 0;
  size_t deletions = 0;
  size_t replacements = 0;
  size_t matches = 0;
  size_t original_tokens = 0;
  size_t edited_tokens = 0;
  double similarity_ratio = 1.0;

  bool changed() const {
    return similarity_ratio < 1.0 || insertions > 0 || deletions > 0 || replacements > 0;
  }
};

// A replace opcode counts max(len_a, len_b) tokens as replacements.
DiffStats diff_stats(std::string_view original, std::string_view edited);
DiffStats diff_stats(const TokenSeq& original, const TokenSeq& edited);

nlohmann::json diff_stats_to_json(const DiffStats& stats);

template <typename Set>
double jaccard(const Set& a, const Set& b) {
  if (a.empty() && b.empty()) return 1.0;
  size_t inter = 0;
  for (const auto& x : a) inter += b.count(x) ? 1 : 0;
  const size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct LabelConsistency {
  size_t n = 0;
  size_t exact_matches = 0;    // identical label sets under the chosen comparison
  size_t matched = 0;          // identical disease sets, statuses ignored
  double exact_match_rate = 1.0;
  double mean_jaccard = 1.0;
};

// Pairs are (model labels, reviewed labels).
LabelConsistency label_consistency(const std::vector<std::pair<LabelSet, LabelSet>>& pairs,
                                   bool compare_status = true);

nlohmann::json label_consistency_to_json(const LabelConsistency& c);

struct ReviewSummary {
  size_t total = 0;
  size_t changed = 0;
  double percent_changed = 0.0;  // 0..100
  double mean_insertions = 0.0;
  double mean_deletions = 0.0;
  double mean_replacements = 0.0;
  double mean_similarity = 0.0;
};

ReviewSummary review_summary(const std::vector<std::pair<std::string, std::string>>& records);
ReviewSummary summarize_stats(const std::vector<DiffStats>& stats);

nlohmann::json review_summary_to_json(const ReviewSummary& s);

// Plain-text block in the reader-study listing layout.
std::string format_review_summary(const ReviewSummary& s);
std::string format_diff_stats(const DiffStats& s);

}  // namespace srrg
