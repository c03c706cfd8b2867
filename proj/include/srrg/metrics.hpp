#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "srrg/labeling.hpp"
#include "srrg/report.hpp"
#include "srrg/taxonomy.hpp"

namespace srrg {

enum class AverageMode { kMicro, kMacro, kWeighted, kSamples };
inline constexpr AverageMode kAllAverageModes[] = {AverageMode::kMicro, AverageMode::kMacro,
                                                   AverageMode::kWeighted, AverageMode::kSamples};
std::string_view average_mode_name(AverageMode mode);
std::optional<AverageMode> average_mode_from_name(std::string_view name);

enum class AlignmentMode { kAligned, kUnaligned };
std::string_view alignment_name(AlignmentMode mode);
std::optional<AlignmentMode> alignment_from_name(std::string_view name);

using ClassSet = std::set<std::string>;

struct ClassCounts {
  size_t tp = 0;
  size_t fp = 0;
  size_t fn = 0;
  size_t support() const { return tp + fn; }
};

// Per-class counts over the union of observed classes and `universe`.
std::map<std::string, ClassCounts> multilabel_confusion(const std::vector<ClassSet>& pred,
                                                        const std::vector<ClassSet>& ref,
                                                        const std::vector<std::string>& universe = {});

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;  // sum of tp + fn over classes
};

struct ClassScore {
  std::string name;
  Prf prf;
};

// Ratios with a zero denominator are 0. In Samples mode a sample with empty
// prediction and empty reference scores 1.
Prf multilabel_prf(const std::vector<ClassSet>& pred, const std::vector<ClassSet>& ref,
                   AverageMode mode, const std::vector<std::string>& universe = {});

std::vector<ClassScore> per_class_scores(const std::vector<ClassSet>& pred,
                                         const std::vector<ClassSet>& ref,
                                         const std::vector<std::string>& universe = {});

// Scored section of a report: a findings category or the impression.
struct SectionKey {
  bool impression = false;
  AnatomicCategory category = AnatomicCategory::kOther;

  std::string name() const;
  friend auto operator<=>(const SectionKey&, const SectionKey&) = default;
};

// Labels for every utterance of one report, grouped by section in document
// order within a section.
using LabeledReport = std::map<SectionKey, std::vector<LabelSet>>;

LabeledReport label_report(const StructuredReport& report, const Labeler& labeler,
                           std::string_view study_id);

// Stand-in reference classes for sections that exist on one side only.
inline constexpr std::string_view kExtraSection = "<extra section>";
inline constexpr std::string_view kMissingSection = "<missing section>";

struct ScoreSample {
  SectionKey section;
  ClassSet pred;
  ClassSet ref;
};

// Samples for one report pair. Unaligned pools a section's utterances into a
// single sample; aligned pairs utterances by position and pairs leftovers
// with the empty set. A section generated but absent from the reference is
// scored against a placeholder class, and a reference section missing from
// the generation is scored with an empty prediction, so both count as 0.
std::vector<ScoreSample> assemble_samples(const LabeledReport& generated,
                                          const LabeledReport& reference, LabelSpace space,
                                          AlignmentMode alignment, const Taxonomy& taxonomy);

struct ScoreReport {
  LabelSpace space = LabelSpace::kLeaves;
  AlignmentMode alignment = AlignmentMode::kUnaligned;
  size_t pairs = 0;
  size_t samples = 0;
  std::map<AverageMode, Prf> scores;
  std::vector<ClassScore> per_class;
  std::map<AnatomicCategory, Prf> per_organ;  // weighted, unaligned
  std::map<AverageMode, Prf> category;
  std::optional<double> bleu;
  std::optional<double> rouge_l;
  std::map<std::string, double> external;

  const Prf& headline() const { return scores.at(AverageMode::kWeighted); }
};

ScoreReport score_samples(const std::vector<ScoreSample>& samples, LabelSpace space,
                          AlignmentMode alignment);

// F1-SRR-BERT for one pair. The reference labeler defaults to `labeler`.
ScoreReport f1_srr(const StructuredReport& generated, const StructuredReport& reference,
                   const Labeler& labeler, LabelSpace space, AlignmentMode alignment,
                   const Taxonomy& taxonomy = Taxonomy::bundled(),
                   const Labeler* reference_labeler = nullptr);

ClassSet present_categories(const StructuredReport& report);

Prf category_f1(const StructuredReport& generated, const StructuredReport& reference,
                AverageMode mode);

// Unaligned scoring restricted to each category present on either side.
std::map<AnatomicCategory, Prf> per_organ_breakdown(
    const StructuredReport& generated, const StructuredReport& reference, const Labeler& labeler,
    LabelSpace space, const Taxonomy& taxonomy = Taxonomy::bundled(),
    const Labeler* reference_labeler = nullptr);

std::map<AnatomicCategory, Prf> per_organ_from_samples(const std::vector<ScoreSample>& unaligned);

// Sentence BLEU on whitespace tokens, 0..100. Unigram precision is unsmoothed;
// higher orders use add-one smoothing. Brevity penalty uses the reference
// length closest to the candidate (the shorter one on ties).
double bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n = 4);

// Corpus BLEU with pooled n-gram counts and lengths, same smoothing.
double corpus_bleu(const std::vector<std::string>& candidates,
                   const std::vector<std::vector<std::string>>& references, int max_n = 4);

// LCS-based F-measure on whitespace tokens with beta = 1.2, 0..100.
double rouge_l(std::string_view candidate, std::string_view reference);

const std::vector<std::string>& builtin_score_names();

ScoreReport merge_external_scores(ScoreReport report, const std::map<std::string, double>& external);

struct ReportPair {
  std::string study_id;
  StructuredReport generated;
  StructuredReport reference;
};

// Batch F1-SRR-BERT over many pairs: samples from every pair are pooled.
// Pairs are processed in parallel and merged in input order.
ScoreReport evaluate_pairs(const std::vector<ReportPair>& pairs, const Labeler& generated_labeler,
                           const Labeler& reference_labeler, LabelSpace space,
                           AlignmentMode alignment, const Taxonomy& taxonomy, size_t workers);

nlohmann::json prf_to_json(const Prf& prf);
// One row per averaging mode.
nlohmann::json score_report_to_json(const ScoreReport& report, std::string_view split);
// Header plus one row per (report, mode). External score columns are the
// union of names across reports; missing values are left empty.
std::string score_reports_to_csv(const std::vector<ScoreReport>& reports, std::string_view split);

}  // namespace srrg
