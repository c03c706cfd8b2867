#pragma once

#include <string>

#include "json.hpp"
#include "srrg/corpus.hpp"
#include "srrg/textdiff.hpp"

namespace srrg {

// Statistics over the review records of a store. The CLI and the HTTP
// service both call these so their outputs are identical.

// Diff between the text a reviewer started from and the stored edit.
// UnknownStudy when the study or its review is missing.
DiffStats study_diff(const CorpusStore& store, const std::string& study_id);
nlohmann::json study_diff_json(const CorpusStore& store, const std::string& study_id);

// Pairs (model labels, reviewed labels) for every labeled utterance of a
// reviewed study. Uncorrected utterances count as accepted unchanged.
std::vector<std::pair<LabelSet, LabelSet>> reviewed_label_pairs(const CorpusStore& store);

// {"review_summary": ..., "label_consistency": ... or null}. EmptyInput when
// there are no reviews.
nlohmann::json summary_json(const CorpusStore& store);

// Payload for one study in the review screen.
nlohmann::json review_task_json(const CorpusStore& store, const Study& study);

}  // namespace srrg
