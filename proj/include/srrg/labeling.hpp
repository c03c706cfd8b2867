#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "srrg/llm.hpp"
#include "srrg/report.hpp"
#include "srrg/taxonomy.hpp"

namespace srrg {

// Maps utterances to label sets, one per input, in input order. Every
// returned disease is a leaf of the labeler's taxonomy. Implementations are
// safe for concurrent use.
class Labeler {
 public:
  virtual ~Labeler() = default;
  virtual std::vector<LabelSet> label(const std::vector<Utterance>& utterances) const = 0;
};

// Uses the disease list of `taxonomy` (its leaves) in place of the abridged
// list printed with the original prompt.
std::string build_disease_prompt(const std::vector<std::string>& utterances,
                                 const Taxonomy& taxonomy = Taxonomy::bundled());

struct DiseaseResponse {
  std::vector<LabelSet> labels;
  // Non-fatal notes, e.g. a line whose echoed finding does not match.
  std::vector<std::string> warnings;
};

// Lines "<finding> => 1. <disease> (<Status>) 2. ..." matched to `expected`
// by position. Blank lines and code fences are ignored.
DiseaseResponse parse_disease_response(std::string_view text,
                                       const std::vector<std::string>& expected,
                                       const Taxonomy& taxonomy = Taxonomy::bundled());

// Inverse of parse_disease_response for one batch.
std::string render_disease_response(const std::vector<std::string>& findings,
                                    const std::vector<LabelSet>& labels);

// Keeps a disease named by at least two of exactly three voters. The kept
// status is the precedence merge over the voters that named it.
LabelSet consensus(const std::vector<LabelSet>& votes);

std::vector<std::pair<Utterance, LabelSet>> discard_unlabeled(
    std::vector<std::pair<Utterance, LabelSet>> records);

// Baseline labeler for tests and smoke runs; not a clinical tool. A phrase
// hit yields its disease with status Uncertain when a hedging cue occurs in
// the utterance, otherwise Absent when a negation cue occurs, otherwise
// Present. No hit yields {No Finding (Present)}.
class KeywordLabeler : public Labeler {
 public:
  KeywordLabeler(std::map<std::string, std::string> lexicon, const Taxonomy& taxonomy);

  static KeywordLabeler from_json(const nlohmann::json& j, const Taxonomy& taxonomy);
  static KeywordLabeler from_file(const std::string& path, const Taxonomy& taxonomy);
  static KeywordLabeler bundled(const Taxonomy& taxonomy = Taxonomy::bundled());

  LabelSet label_text(std::string_view text) const;
  std::vector<LabelSet> label(const std::vector<Utterance>& utterances) const override;

 private:
  std::vector<std::pair<std::string, std::string>> phrases_;  // longest first
};

// Serves labels read from a prediction file. Rows are keyed by utterance
// key, so row order does not matter.
class PredictionLabeler : public Labeler {
 public:
  // `known_keys`, when non-empty, restricts rows to existing utterances.
  static PredictionLabeler from_jsonl(std::string_view text, const Taxonomy& taxonomy,
                                      const std::vector<std::string>& known_keys = {});
  static PredictionLabeler from_file(const std::string& path, const Taxonomy& taxonomy,
                                     const std::vector<std::string>& known_keys = {});

  size_t size() const { return rows_.size(); }
  std::vector<LabelSet> label(const std::vector<Utterance>& utterances) const override;

 private:
  std::unordered_map<std::string, LabelSet> rows_;
};

nlohmann::json prediction_row(const Utterance& utterance, const LabelSet& labels);

// Labels through an LLM with the disease prompt. Utterances are batched per
// study (up to `batch_size` lines per prompt). With three voters each batch
// is completed three times and reduced with consensus().
class LlmLabeler : public Labeler {
 public:
  LlmLabeler(LlmClient& client, const Taxonomy& taxonomy, int voters = 1, size_t batch_size = 32);

  std::vector<LabelSet> label(const std::vector<Utterance>& utterances) const override;

 private:
  LlmClient& client_;
  const Taxonomy& taxonomy_;
  int voters_;
  size_t batch_size_;
};

}  // namespace srrg
