#include "srrg/review.hpp"

#include <map>

#include "srrg/error.hpp"

namespace srrg {

DiffStats study_diff(const CorpusStore& store, const std::string& study_id) {
  auto study = store.study(study_id);
  if (!study) throw Error(ErrorCode::kUnknownStudy, "unknown study: " + study_id);
  auto review = store.review(study_id);
  if (!review) throw Error(ErrorCode::kUnknownStudy, "study has no review: " + study_id);
  return diff_stats(study->review_base(), review->edited_text);
}

nlohmann::json study_diff_json(const CorpusStore& store, const std::string& study_id) {
  nlohmann::json j = diff_stats_to_json(study_diff(store, study_id));
  j["study_id"] = study_id;
  j["version"] = store.review_version(study_id);
  return j;
}

std::vector<std::pair<LabelSet, LabelSet>> reviewed_label_pairs(const CorpusStore& store) {
  std::vector<std::pair<LabelSet, LabelSet>> pairs;
  for (const auto& review : store.reviews()) {
    std::map<std::string, const LabelSet*> corrected;
    for (const auto& c : review.label_corrections) corrected[c.utterance_key] = &c.labels;
    for (const auto& u : store.utterances(review.study_id)) {
      if (!u.labels) continue;
      auto it = corrected.find(u.key());
      pairs.emplace_back(*u.labels, it == corrected.end() ? *u.labels : *it->second);
    }
  }
  return pairs;
}

nlohmann::json summary_json(const CorpusStore& store) {
  std::vector<DiffStats> stats;
  for (const auto& review : store.reviews()) stats.push_back(study_diff(store, review.study_id));
  if (stats.empty()) throw Error(ErrorCode::kEmptyInput, "no reviews stored");
  nlohmann::json j;
  j["review_summary"] = review_summary_to_json(summarize_stats(stats));
  const auto pairs = reviewed_label_pairs(store);
  j["label_consistency"] =
      pairs.empty() ? nlohmann::json(nullptr) : label_consistency_to_json(label_consistency(pairs));
  return j;
}

nlohmann::json review_task_json(const CorpusStore& store, const Study& study) {
  nlohmann::json j;
  j["study_id"] = study.study_id;
  j["source"] = study.source;
  j["original_text"] = study.original_text;
  std::string structured = study.structured_text.value_or("");
  std::vector<Utterance> utterances;
  if (study.structured_text) {
    auto parsed = parse_report(*study.structured_text, ParseMode::kLenient);
    if (parsed.ok()) structured = render_report(*parsed.report);
    if (parsed.report) utterances = extract_utterances(*parsed.report, study.study_id);
  }
  j["structured_text"] = structured;
  std::map<std::string, UtteranceRecord> stored;
  for (auto& r : store.utterances(study.study_id)) stored.emplace(r.key(), std::move(r));
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& u : utterances) {
    nlohmann::json row = {{"key", u.key()}, {"origin", origin_to_json(u.origin)}, {"text", u.text}};
    auto it = stored.find(u.key());
    if (it != stored.end() && it->second.labels) {
      row["labels"] = labels_to_json(*it->second.labels);
      row["provenance"] = it->second.provenance ? nlohmann::json(provenance_name(*it->second.provenance))
                                                : nlohmann::json(nullptr);
    } else {
      row["labels"] = nlohmann::json::array();
      row["provenance"] = nullptr;
    }
    rows.push_back(std::move(row));
  }
  j["utterances"] = rows;
  j["version"] = store.review_version(study.study_id);
  return j;
}

}  // namespace srrg
