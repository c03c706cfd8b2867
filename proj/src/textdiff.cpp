#include "srrg/textdiff.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <tuple>
#include <unordered_map>

#include "srrg/error.hpp"

namespace srrg {

namespace {

// Byte length of a whitespace code point at s[i], or 0.
size_t whitespace_len(std::string_view s, size_t i) {
  const auto c = static_cast<unsigned char>(s[i]);
  if (c == ' ' || (c >= 0x09 && c <= 0x0D) || (c >= 0x1C && c <= 0x1F)) return 1;
  auto byte = [&](size_t k) { return i + k < s.size() ? static_cast<unsigned char>(s[i + k]) : 0; };
  if (c == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
  if (c == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;  // U+1680
  if (c == 0xE2 && byte(1) == 0x80) {
    const auto c2 = byte(2);
    if ((c2 >= 0x80 && c2 <= 0x8A) || c2 == 0xA8 || c2 == 0xA9 || c2 == 0xAF) return 3;
  }
  if (c == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;  // U+205F
  if (c == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
  return 0;
}

class Matcher {
 public:
  Matcher(const TokenSeq& a, const TokenSeq& b) : a_(a), b_(b) {
    // Intern tokens so the inner loop compares integers.
    std::unordered_map<std::string, int> ids;
    auto intern = [&](const std::string& t) {
      return ids.emplace(t, static_cast<int>(ids.size())).first->second;
    };
    for (const auto& t : b_) b_ids_.push_back(intern(t));
    for (const auto& t : a_) a_ids_.push_back(intern(t));
    positions_.resize(ids.size());
    for (size_t j = 0; j < b_ids_.size(); ++j) positions_[b_ids_[j]].push_back(j);
  }

  MatchBlock longest(size_t alo, size_t ahi, size_t blo, size_t bhi) const {
    MatchBlock best{alo, blo, 0};
    // run[j + 1] = length of the match ending at (i - 1, j)
    std::vector<size_t> run(b_.size() + 1, 0), next(b_.size() + 1, 0);
    std::vector<size_t> touched, next_touched;
    for (size_t i = alo; i < ahi; ++i) {
      next_touched.clear();
      for (size_t j : positions_[a_ids_[i]]) {
        if (j < blo) continue;
        if (j >= bhi) break;
        const size_t k = run[j] + 1;
        next[j + 1] = k;
        next_touched.push_back(j + 1);
        if (k > best.size) best = {i + 1 - k, j + 1 - k, k};
      }
      for (size_t idx : touched) run[idx] = 0;
      for (size_t idx : next_touched) {
        run[idx] = next[idx];
        next[idx] = 0;
      }
      std::swap(touched, next_touched);
    }
    return best;
  }

  std::vector<MatchBlock> blocks() const {
    std::vector<MatchBlock> found;
    std::vector<std::array<size_t, 4>> queue{{0, a_.size(), 0, b_.size()}};
    while (!queue.empty()) {
      const auto [alo, ahi, blo, bhi] = queue.back();
      queue.pop_back();
      const MatchBlock m = longest(alo, ahi, blo, bhi);
      if (m.size == 0) continue;
      found.push_back(m);
      if (alo < m.a && blo < m.b) queue.push_back({alo, m.a, blo, m.b});
      if (m.a + m.size < ahi && m.b + m.size < bhi) {
        queue.push_back({m.a + m.size, ahi, m.b + m.size, bhi});
      }
    }
    std::sort(found.begin(), found.end(),
              [](const MatchBlock& x, const MatchBlock& y) { return std::tie(x.a, x.b) < std::tie(y.a, y.b); });
    std::vector<MatchBlock> merged;
    for (const auto& m : found) {
      if (!merged.empty() && merged.back().a + merged.back().size == m.a &&
          merged.back().b + merged.back().size == m.b) {
        merged.back().size += m.size;
      } else {
        merged.push_back(m);
      }
    }
    merged.push_back({a_.size(), b_.size(), 0});
    return merged;
  }

 private:
  const TokenSeq& a_;
  const TokenSeq& b_;
  std::vector<int> a_ids_, b_ids_;
  std::vector<std::vector<size_t>> positions_;
};

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::string current;
  size_t i = 0;
  while (i < text.size()) {
    if (size_t w = whitespace_len(text, i)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
      i += w;
      continue;
    }
    current.push_back(text[i]);
    ++i;
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::vector<MatchBlock> matching_blocks(const TokenSeq& a, const TokenSeq& b) {
  return Matcher(a, b).blocks();
}

std::string_view op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::kEqual: return "equal";
    case OpKind::kInsert: return "insert";
    case OpKind::kDelete: return "delete";
    case OpKind::kReplace: return "replace";
  }
  return "unknown";
}

std::vector<Opcode> opcodes(const TokenSeq& a, const TokenSeq& b) {
  std::vector<Opcode> out;
  size_t i = 0, j = 0;
  for (const auto& m : matching_blocks(a, b)) {
    if (i < m.a && j < m.b) out.push_back({OpKind::kReplace, i, m.a, j, m.b});
    else if (i < m.a) out.push_back({OpKind::kDelete, i, m.a, j, m.b});
    else if (j < m.b) out.push_back({OpKind::kInsert, i, m.a, j, m.b});
    i = m.a + m.size;
    j = m.b + m.size;
    if (m.size) out.push_back({OpKind::kEqual, m.a, i, m.b, j});
  }
  return out;
}

DiffStats diff_stats(const TokenSeq& original, const TokenSeq& edited) {
  DiffStats s;
  s.original_tokens = original.size();
  s.edited_tokens = edited.size();
  for (const auto& op : opcodes(original, edited)) {
    const size_t la = op.a_hi - op.a_lo;
    const size_t lb = op.b_hi - op.b_lo;
    switch (op.kind) {
      case OpKind::kEqual: s.matches += la; break;
      case OpKind::kInsert: s.insertions += lb; break;
      case OpKind::kDelete: s.deletions += la; break;
      case OpKind::kReplace: s.replacements += std::max(la, lb); break;
    }
  }
  const size_t total = original.size() + edited.size();
  s.similarity_ratio = total == 0 ? 1.0 : 2.0 * static_cast<double>(s.matches) / static_cast<double>(total);
  return s;
}

DiffStats diff_stats(std::string_view original, std::string_view edited) {
  return diff_stats(tokenize(original), tokenize(edited));
}

nlohmann::json diff_stats_to_json(const DiffStats& stats) {
  return {{"insertions", stats.insertions},
          {"deletions", stats.deletions},
          {"replacements", stats.replacements},
          {"matches", stats.matches},
          {"original_tokens", stats.original_tokens},
          {"edited_tokens", stats.edited_tokens},
          {"similarity_ratio", stats.similarity_ratio}};
}

LabelConsistency label_consistency(const std::vector<std::pair<LabelSet, LabelSet>>& pairs,
                                   bool compare_status) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no label pairs");
  LabelConsistency c;
  c.n = pairs.size();
  double jaccard_sum = 0.0;
  for (const auto& [model, reviewed] : pairs) {
    const auto model_d = model.diseases();
    const auto reviewed_d = reviewed.diseases();
    if (model_d == reviewed_d) ++c.matched;
    if (compare_status) {
      std::set<std::string> a, b;
      for (const auto& [d, s] : model) a.insert(class_name(d, s, true));
      for (const auto& [d, s] : reviewed) b.insert(class_name(d, s, true));
      if (a == b) ++c.exact_matches;
      jaccard_sum += jaccard(a, b);
    } else {
      if (model_d == reviewed_d) ++c.exact_matches;
      jaccard_sum += jaccard(model_d, reviewed_d);
    }
  }
  c.exact_match_rate = static_cast<double>(c.exact_matches) / static_cast<double>(c.n);
  c.mean_jaccard = jaccard_sum / static_cast<double>(c.n);
  return c;
}

nlohmann::json label_consistency_to_json(const LabelConsistency& c) {
  return {{"total_utterances", c.n},
          {"exact_matches", c.exact_matches},
          {"matched_utterances", c.matched},
          {"exact_match_rate", c.exact_match_rate},
          {"mean_jaccard", c.mean_jaccard}};
}

ReviewSummary summarize_stats(const std::vector<DiffStats>& stats) {
  if (stats.empty()) throw Error(ErrorCode::kEmptyInput, "no review records");
  ReviewSummary s;
  s.total = stats.size();
  double ins = 0, del = 0, rep = 0, ratio = 0;
  for (const auto& d : stats) {
    if (d.changed()) ++s.changed;
    ins += static_cast<double>(d.insertions);
    del += static_cast<double>(d.deletions);
    rep += static_cast<double>(d.replacements);
    ratio += d.similarity_ratio;
  }
  const double n = static_cast<double>(s.total);
  s.percent_changed = 100.0 * static_cast<double>(s.changed) / n;
  s.mean_insertions = ins / n;
  s.mean_deletions = del / n;
  s.mean_replacements = rep / n;
  s.mean_similarity = safe_div(ratio, n);
  return s;
}

ReviewSummary review_summary(const std::vector<std::pair<std::string, std::string>>& records) {
  std::vector<DiffStats> stats;
  stats.reserve(records.size());
  for (const auto& [original, edited] : records) stats.push_back(diff_stats(original, edited));
  return summarize_stats(stats);
}

nlohmann::json review_summary_to_json(const ReviewSummary& s) {
  return {{"total_studies", s.total},
          {"studies_changed", s.changed},
          {"percent_changed", s.percent_changed},
          {"mean_insertions", s.mean_insertions},
          {"mean_deletions", s.mean_deletions},
          {"mean_replacements", s.mean_replacements},
          {"mean_similarity_ratio", s.mean_similarity}};
}

std::string format_review_summary(const ReviewSummary& s) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "Total studies reviewed: %zu\n"
                "Studies with changes: %zu (%.2f%%)\n"
                "Average insertions per study: %.2f\n"
                "Average deletions per study: %.2f\n"
                "Average replacements per study: %.2f\n"
                "Average similarity ratio: %.2f\n",
                s.total, s.changed, s.percent_changed, s.mean_insertions, s.mean_deletions,
                s.mean_replacements, s.mean_similarity);
  return buf;
}

std::string format_diff_stats(const DiffStats& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "Insertions: %zu, Deletions: %zu, Replacements: %zu, Similarity Ratio: %.2f\n",
                s.insertions, s.deletions, s.replacements, s.similarity_ratio);
  return buf;
}

}  // namespace srrg
