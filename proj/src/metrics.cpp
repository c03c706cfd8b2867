#include "srrg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "srrg/error.hpp"
#include "srrg/parallel.hpp"
#include "srrg/text_util.hpp"
#include "srrg/textdiff.hpp"

namespace srrg {

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

Prf class_prf(const ClassCounts& c) {
  Prf out;
  out.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  out.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  out.f1 = harmonic(out.precision, out.recall);
  out.support = c.support();
  return out;
}

ClassSet union_classes(const std::vector<LabelSet>& sets, LabelSpace space,
                       const Taxonomy& taxonomy) {
  ClassSet out;
  for (const auto& s : sets) {
    auto c = taxonomy.classes(s, space);
    out.insert(c.begin(), c.end());
  }
  return out;
}

using NgramCounts = std::map<std::vector<std::string>, size_t>;

NgramCounts ngrams(const TokenSeq& tokens, int n) {
  NgramCounts out;
  if (tokens.size() < static_cast<size_t>(n)) return out;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    ++out[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return out;
}

struct BleuStats {
  std::vector<size_t> matches;
  std::vector<size_t> totals;
  size_t cand_len = 0;
  size_t ref_len = 0;
};

void accumulate_bleu(const TokenSeq& cand, const std::vector<TokenSeq>& refs, int max_n,
                     BleuStats& stats) {
  stats.cand_len += cand.size();
  // Closest reference length, shorter on ties.
  size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [&](size_t len) {
      return len > cand.size() ? len - cand.size() : cand.size() - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  stats.ref_len += best;
  for (int n = 1; n <= max_n; ++n) {
    const auto cand_counts = ngrams(cand, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    for (const auto& [g, c] : cand_counts) {
      auto it = max_ref.find(g);
      stats.matches[n - 1] += std::min(c, it == max_ref.end() ? 0 : it->second);
      stats.totals[n - 1] += c;
    }
  }
}

double finish_bleu(const BleuStats& s, int max_n) {
  if (s.cand_len == 0) return s.ref_len == 0 ? 100.0 : 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const double m = static_cast<double>(s.matches[n - 1]);
    const double c = static_cast<double>(s.totals[n - 1]);
    const double p = n == 1 ? ratio(m, c) : (m + 1.0) / (c + 1.0);
    if (p == 0.0) return 0.0;
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(s.cand_len);
  const double r = static_cast<double>(s.ref_len);
  const double bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::exp(log_sum / max_n);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::string_view average_mode_name(AverageMode mode) {
  switch (mode) {
    case AverageMode::kMicro: return "micro";
    case AverageMode::kMacro: return "macro";
    case AverageMode::kWeighted: return "weighted";
    case AverageMode::kSamples: return "samples";
  }
  return "unknown";
}

std::optional<AverageMode> average_mode_from_name(std::string_view name) {
  const std::string key = to_lower(name);
  for (auto m : kAllAverageModes) {
    if (average_mode_name(m) == key) return m;
  }
  return std::nullopt;
}

std::string_view alignment_name(AlignmentMode mode) {
  return mode == AlignmentMode::kAligned ? "aligned" : "unaligned";
}

std::optional<AlignmentMode> alignment_from_name(std::string_view name) {
  const std::string key = to_lower(name);
  if (key == "aligned") return AlignmentMode::kAligned;
  if (key == "unaligned") return AlignmentMode::kUnaligned;
  return std::nullopt;
}

std::map<std::string, ClassCounts> multilabel_confusion(const std::vector<ClassSet>& pred,
                                                        const std::vector<ClassSet>& ref,
                                                        const std::vector<std::string>& universe) {
  if (pred.size() != ref.size()) {
    throw Error(ErrorCode::kLengthMismatch, "prediction and reference counts differ");
  }
  std::map<std::string, ClassCounts> counts;
  for (const auto& c : universe) counts[c];
  for (size_t i = 0; i < pred.size(); ++i) {
    for (const auto& c : pred[i]) {
      if (ref[i].count(c)) ++counts[c].tp;
      else ++counts[c].fp;
    }
    for (const auto& c : ref[i]) {
      if (!pred[i].count(c)) ++counts[c].fn;
    }
  }
  return counts;
}

std::vector<ClassScore> per_class_scores(const std::vector<ClassSet>& pred,
                                         const std::vector<ClassSet>& ref,
                                         const std::vector<std::string>& universe) {
  std::vector<ClassScore> out;
  for (const auto& [name, c] : multilabel_confusion(pred, ref, universe)) {
    out.push_back({name, class_prf(c)});
  }
  return out;
}

Prf multilabel_prf(const std::vector<ClassSet>& pred, const std::vector<ClassSet>& ref,
                   AverageMode mode, const std::vector<std::string>& universe) {
  const auto counts = multilabel_confusion(pred, ref, universe);
  Prf out;
  for (const auto& [name, c] : counts) out.support += c.support();
  switch (mode) {
    case AverageMode::kMicro: {
      ClassCounts total;
      for (const auto& [name, c] : counts) {
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
      }
      const Prf p = class_prf(total);
      out.precision = p.precision;
      out.recall = p.recall;
      out.f1 = p.f1;
      break;
    }
    case AverageMode::kMacro:
    case AverageMode::kWeighted: {
      double wsum = 0.0;
      for (const auto& [name, c] : counts) {
        const Prf p = class_prf(c);
        const double w = mode == AverageMode::kMacro ? 1.0 : static_cast<double>(c.support());
        out.precision += w * p.precision;
        out.recall += w * p.recall;
        out.f1 += w * p.f1;
        wsum += w;
      }
      out.precision = ratio(out.precision, wsum);
      out.recall = ratio(out.recall, wsum);
      out.f1 = ratio(out.f1, wsum);
      break;
    }
    case AverageMode::kSamples: {
      for (size_t i = 0; i < pred.size(); ++i) {
        if (pred[i].empty() && ref[i].empty()) {
          out.precision += 1.0;
          out.recall += 1.0;
          out.f1 += 1.0;
          continue;
        }
        size_t tp = 0;
        for (const auto& c : pred[i]) tp += ref[i].count(c);
        const double p = ratio(static_cast<double>(tp), static_cast<double>(pred[i].size()));
        const double r = ratio(static_cast<double>(tp), static_cast<double>(ref[i].size()));
        out.precision += p;
        out.recall += r;
        out.f1 += harmonic(p, r);
      }
      const double n = static_cast<double>(pred.size());
      out.precision = ratio(out.precision, n);
      out.recall = ratio(out.recall, n);
      out.f1 = ratio(out.f1, n);
      break;
    }
  }
  return out;
}

std::string SectionKey::name() const {
  return impression ? std::string(section_header(SectionKind::kImpression))
                    : std::string(category_header(category));
}

LabeledReport label_report(const StructuredReport& report, const Labeler& labeler,
                           std::string_view study_id) {
  const auto utterances = extract_utterances(report, study_id);
  std::vector<LabelSet> labels;
  try {
    labels = labeler.label(utterances);
  } catch (const Error& e) {
    throw Error(ErrorCode::kLabelerFailure,
                "labeler failed for study " + std::string(study_id) + ": " + e.what());
  }
  if (labels.size() != utterances.size()) {
    throw Error(ErrorCode::kLabelerFailure, "labeler returned " + std::to_string(labels.size()) +
                                                " sets for " + std::to_string(utterances.size()) +
                                                " utterances in study " + std::string(study_id));
  }
  LabeledReport out;
  for (size_t i = 0; i < utterances.size(); ++i) {
    const auto& o = utterances[i].origin;
    SectionKey key;
    key.impression = o.kind == UtteranceOrigin::Kind::kImpression;
    if (!key.impression) key.category = o.category;
    out[key].push_back(std::move(labels[i]));
  }
  return out;
}

std::vector<ScoreSample> assemble_samples(const LabeledReport& generated,
                                          const LabeledReport& reference, LabelSpace space,
                                          AlignmentMode alignment, const Taxonomy& taxonomy) {
  std::set<SectionKey> keys;
  for (const auto& [k, v] : generated) keys.insert(k);
  for (const auto& [k, v] : reference) keys.insert(k);
  const ClassSet extra = {std::string(kExtraSection)};
  const ClassSet missing = {std::string(kMissingSection)};
  std::vector<ScoreSample> out;
  for (const auto& key : keys) {
    auto g = generated.find(key);
    auto r = reference.find(key);
    const bool has_g = g != generated.end() && !g->second.empty();
    const bool has_r = r != reference.end() && !r->second.empty();
    if (!has_g && !has_r) continue;
    if (alignment == AlignmentMode::kUnaligned) {
      ScoreSample s{key, {}, {}};
      if (has_g) s.pred = union_classes(g->second, space, taxonomy);
      if (has_r) s.ref = union_classes(r->second, space, taxonomy);
      if (!has_r) s.ref = extra;
      else if (!has_g && s.ref.empty()) s.ref = missing;
      out.push_back(std::move(s));
      continue;
    }
    const size_t ng = has_g ? g->second.size() : 0;
    const size_t nr = has_r ? r->second.size() : 0;
    for (size_t i = 0; i < std::max(ng, nr); ++i) {
      ScoreSample s{key, {}, {}};
      if (i < ng) s.pred = taxonomy.classes(g->second[i], space);
      if (i < nr) s.ref = taxonomy.classes(r->second[i], space);
      if (!has_r) s.ref = extra;
      else if (!has_g && s.ref.empty()) s.ref = missing;
      out.push_back(std::move(s));
    }
  }
  return out;
}

ScoreReport score_samples(const std::vector<ScoreSample>& samples, LabelSpace space,
                          AlignmentMode alignment) {
  ScoreReport out;
  out.space = space;
  out.alignment = alignment;
  out.samples = samples.size();
  std::vector<ClassSet> pred, ref;
  pred.reserve(samples.size());
  ref.reserve(samples.size());
  for (const auto& s : samples) {
    pred.push_back(s.pred);
    ref.push_back(s.ref);
  }
  for (auto m : kAllAverageModes) out.scores[m] = multilabel_prf(pred, ref, m);
  out.per_class = per_class_scores(pred, ref);
  return out;
}

ClassSet present_categories(const StructuredReport& report) {
  ClassSet out;
  for (const auto& group : report.findings) {
    if (!group.observations.empty()) out.insert(std::string(category_header(group.category)));
  }
  return out;
}

Prf category_f1(const StructuredReport& generated, const StructuredReport& reference,
                AverageMode mode) {
  return multilabel_prf({present_categories(generated)}, {present_categories(reference)}, mode);
}

std::map<AnatomicCategory, Prf> per_organ_from_samples(const std::vector<ScoreSample>& unaligned) {
  std::map<AnatomicCategory, std::pair<std::vector<ClassSet>, std::vector<ClassSet>>> by_cat;
  for (const auto& s : unaligned) {
    if (s.section.impression) continue;
    auto& [p, r] = by_cat[s.section.category];
    p.push_back(s.pred);
    r.push_back(s.ref);
  }
  std::map<AnatomicCategory, Prf> out;
  for (const auto& [cat, pr] : by_cat) {
    out[cat] = multilabel_prf(pr.first, pr.second, AverageMode::kWeighted);
  }
  return out;
}

ScoreReport f1_srr(const StructuredReport& generated, const StructuredReport& reference,
                   const Labeler& labeler, LabelSpace space, AlignmentMode alignment,
                   const Taxonomy& taxonomy, const Labeler* reference_labeler) {
  ReportPair pair{"", generated, reference};
  return evaluate_pairs({pair}, labeler, reference_labeler ? *reference_labeler : labeler, space,
                        alignment, taxonomy, 1);
}

std::map<AnatomicCategory, Prf> per_organ_breakdown(const StructuredReport& generated,
                                                    const StructuredReport& reference,
                                                    const Labeler& labeler, LabelSpace space,
                                                    const Taxonomy& taxonomy,
                                                    const Labeler* reference_labeler) {
  const auto g = label_report(generated, labeler, "");
  const auto r = label_report(reference, reference_labeler ? *reference_labeler : labeler, "");
  return per_organ_from_samples(assemble_samples(g, r, space, AlignmentMode::kUnaligned, taxonomy));
}

double bleu(std::string_view candidate, const std::vector<std::string>& references, int max_n) {
  return corpus_bleu({std::string(candidate)}, {references}, max_n);
}

double corpus_bleu(const std::vector<std::string>& candidates,
                   const std::vector<std::vector<std::string>>& references, int max_n) {
  if (candidates.size() != references.size()) {
    throw Error(ErrorCode::kLengthMismatch, "candidate and reference counts differ");
  }
  if (max_n < 1) throw Error(ErrorCode::kEmptyInput, "max_n must be positive");
  BleuStats stats;
  stats.matches.assign(max_n, 0);
  stats.totals.assign(max_n, 0);
  for (size_t i = 0; i < candidates.size(); ++i) {
    if (references[i].empty()) throw Error(ErrorCode::kEmptyReference, "no reference given");
    std::vector<TokenSeq> refs;
    for (const auto& r : references[i]) refs.push_back(tokenize(r));
    accumulate_bleu(tokenize(candidates[i]), refs, max_n, stats);
  }
  return finish_bleu(stats, max_n);
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = tokenize(candidate);
  const auto r = tokenize(reference);
  if (c.empty() && r.empty()) return 100.0;
  if (c.empty() || r.empty()) return 0.0;
  std::vector<size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
  for (size_t i = 1; i <= c.size(); ++i) {
    for (size_t j = 1; j <= r.size(); ++j) {
      cur[j] = c[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  const double lcs = static_cast<double>(prev[r.size()]);
  if (lcs == 0.0) return 0.0;
  const double rec = lcs / static_cast<double>(r.size());
  const double prec = lcs / static_cast<double>(c.size());
  constexpr double kBeta2 = 1.2 * 1.2;
  return 100.0 * (1.0 + kBeta2) * rec * prec / (rec + kBeta2 * prec);
}

const std::vector<std::string>& builtin_score_names() {
  static const std::vector<std::string> kNames = {
      "BLEU",      "ROUGE-L", "F1-SRR-BERT", "Category", "Precision", "Recall", "F1-Score",
      "split",     "space",   "alignment",   "mode",     "support"};
  return kNames;
}

ScoreReport merge_external_scores(ScoreReport report, const std::map<std::string, double>& external) {
  for (const auto& [name, value] : external) {
    const std::string key = to_lower(name);
    for (const auto& b : builtin_score_names()) {
      if (to_lower(b) == key || key.rfind(to_lower(b) + " ", 0) == 0) {
        throw Error(ErrorCode::kNameCollision, "external score name collides with built-in: " + name);
      }
    }
    if (report.external.count(name)) {
      throw Error(ErrorCode::kNameCollision, "external score already attached: " + name);
    }
    report.external[name] = value;
  }
  return report;
}

ScoreReport evaluate_pairs(const std::vector<ReportPair>& pairs, const Labeler& generated_labeler,
                           const Labeler& reference_labeler, LabelSpace space,
                           AlignmentMode alignment, const Taxonomy& taxonomy, size_t workers) {
  struct PairResult {
    std::vector<ScoreSample> samples;
    std::vector<ScoreSample> unaligned;
    std::string gen_text;
    std::string ref_text;
  };
  const auto results = parallel_map<PairResult>(pairs.size(), workers, [&](size_t i) {
    const auto& p = pairs[i];
    const auto g = label_report(p.generated, generated_labeler, p.study_id);
    const auto r = label_report(p.reference, reference_labeler, p.study_id);
    PairResult out;
    out.unaligned = assemble_samples(g, r, space, AlignmentMode::kUnaligned, taxonomy);
    out.samples = alignment == AlignmentMode::kUnaligned
                      ? out.unaligned
                      : assemble_samples(g, r, space, alignment, taxonomy);
    out.gen_text = render_report(p.generated);
    out.ref_text = render_report(p.reference);
    return out;
  });

  std::vector<ScoreSample> samples, unaligned;
  std::vector<ClassSet> gen_cats, ref_cats;
  std::vector<std::string> candidates;
  std::vector<std::vector<std::string>> references;
  double rouge_sum = 0.0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& res = results[i];
    samples.insert(samples.end(), res.samples.begin(), res.samples.end());
    unaligned.insert(unaligned.end(), res.unaligned.begin(), res.unaligned.end());
    gen_cats.push_back(present_categories(pairs[i].generated));
    ref_cats.push_back(present_categories(pairs[i].reference));
    candidates.push_back(res.gen_text);
    references.push_back({res.ref_text});
    rouge_sum += rouge_l(res.gen_text, res.ref_text);
  }
  ScoreReport out = score_samples(samples, space, alignment);
  out.pairs = pairs.size();
  out.per_organ = per_organ_from_samples(unaligned);
  for (auto m : kAllAverageModes) out.category[m] = multilabel_prf(gen_cats, ref_cats, m);
  if (!pairs.empty()) {
    out.bleu = corpus_bleu(candidates, references);
    out.rouge_l = rouge_sum / static_cast<double>(pairs.size());
  }
  return out;
}

nlohmann::json prf_to_json(const Prf& prf) {
  return {{"precision", prf.precision},
          {"recall", prf.recall},
          {"f1", prf.f1},
          {"support", prf.support}};
}

nlohmann::json score_report_to_json(const ScoreReport& report, std::string_view split) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& c : report.per_class) per_class[c.name] = prf_to_json(c.prf);
  nlohmann::json per_organ = nlohmann::json::object();
  for (const auto& [cat, prf] : report.per_organ) {
    per_organ[std::string(category_header(cat))] = prf_to_json(prf);
  }
  for (auto m : kAllAverageModes) {
    const Prf& s = report.scores.at(m);
    nlohmann::json row = {{"split", split},
                          {"space", label_space_name(report.space)},
                          {"alignment", alignment_name(report.alignment)},
                          {"mode", average_mode_name(m)},
                          {"precision", s.precision},
                          {"recall", s.recall},
                          {"f1", s.f1},
                          {"support", s.support},
                          {"pairs", report.pairs},
                          {"samples", report.samples}};
    if (report.category.count(m)) row["category"] = prf_to_json(report.category.at(m));
    if (report.bleu) row["bleu"] = *report.bleu;
    if (report.rouge_l) row["rouge_l"] = *report.rouge_l;
    row["per_class"] = per_class;
    row["per_organ"] = per_organ;
    if (!report.external.empty()) row["external"] = report.external;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string score_reports_to_csv(const std::vector<ScoreReport>& reports, std::string_view split) {
  std::set<std::string> ext_names;
  for (const auto& r : reports) {
    for (const auto& [name, v] : r.external) ext_names.insert(name);
  }
  std::ostringstream out;
  out << "split,space,alignment,mode,BLEU,ROUGE-L,Precision,Recall,F1-Score,"
         "Category Precision,Category Recall,Category F1-Score,support";
  for (const auto& n : ext_names) out << ',' << csv_field(n);
  out << '\n';
  for (const auto& r : reports) {
    for (auto m : kAllAverageModes) {
      const Prf& s = r.scores.at(m);
      out << csv_field(split) << ',' << label_space_name(r.space) << ','
          << alignment_name(r.alignment) << ',' << average_mode_name(m) << ','
          << (r.bleu ? format_double(*r.bleu) : "") << ','
          << (r.rouge_l ? format_double(*r.rouge_l) : "") << ',' << format_double(s.precision)
          << ',' << format_double(s.recall) << ',' << format_double(s.f1) << ',';
      if (r.category.count(m)) {
        const Prf& c = r.category.at(m);
        out << format_double(c.precision) << ',' << format_double(c.recall) << ','
            << format_double(c.f1);
      } else {
        out << ",,";
      }
      out << ',' << s.support;
      for (const auto& n : ext_names) {
        out << ',';
        auto it = r.external.find(n);
        if (it != r.external.end()) out << format_double(it->second);
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace srrg
