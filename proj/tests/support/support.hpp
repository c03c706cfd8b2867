#pragma once

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "srrg/labeling.hpp"
#include "srrg/report.hpp"
#include "srrg/taxonomy.hpp"

namespace srrg::testing {

inline std::string source_path(const std::string& rel) { return std::string(SRRG_SOURCE_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary);
  out << data;
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "srrg-test-XXXXXX").string();
    path_ = mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

// Sentences the bundled keyword lexicon recognizes, plus a few it does not.
inline const std::vector<std::string>& phrase_pool() {
  static const std::vector<std::string> kPool = {
      "No pneumothorax.",
      "Small left pleural effusion.",
      "Heart size is normal.",
      "Mild cardiomegaly.",
      "Possible pneumonia in the right lower lobe.",
      "Bibasilar atelectasis.",
      "Mild pulmonary edema.",
      "Right PICC line terminates in the SVC.",
      "Healed left rib fracture.",
      "No acute osseous abnormality.",
      "Emphysema.",
      "Cannot exclude small pneumothorax.",
      "Lungs are clear.",
      "Tortuous aorta.",
      "Hiatal hernia.",
      "Pacemaker leads are in standard position.",
  };
  return kPool;
}

// Random report satisfying the structural invariants. Categories are emitted
// in a shuffled order to exercise source-order preservation.
inline StructuredReport random_report(std::mt19937& rng, bool allow_free_text = true) {
  auto coin = [&](double p) { return std::uniform_real_distribution<>(0, 1)(rng) < p; };
  auto pick = [&]() {
    const auto& pool = phrase_pool();
    return pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(rng)];
  };
  StructuredReport r;
  if (allow_free_text) {
    if (coin(0.5)) r.exam_type = "CHEST (PA AND LAT)";
    if (coin(0.5)) r.history = "Shortness of breath.";
    if (coin(0.3)) r.technique = "Frontal and lateral views of the chest.";
    if (coin(0.3)) r.comparison = "None.";
  }
  std::vector<AnatomicCategory> cats(kAllCategories.begin(), kAllCategories.end());
  std::shuffle(cats.begin(), cats.end(), rng);
  const size_t n_cats = std::uniform_int_distribution<size_t>(0, 4)(rng);
  for (size_t i = 0; i < n_cats; ++i) {
    CategoryFindings f{cats[i], {}};
    const int n = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int k = 0; k < n; ++k) f.observations.push_back({pick()});
    r.findings.push_back(std::move(f));
  }
  r.has_findings_section = !r.findings.empty();
  const int n_imp = std::uniform_int_distribution<int>(n_cats == 0 ? 1 : 0, 3)(rng);
  for (int k = 1; k <= n_imp; ++k) r.impression.push_back({k, pick()});
  r.has_impression_section = !r.impression.empty();
  return r;
}

// Deterministic labeler backed by a text -> labels table; unknown text maps
// to No Finding.
class TableLabeler : public Labeler {
 public:
  explicit TableLabeler(std::map<std::string, LabelSet> table) : table_(std::move(table)) {}

  std::vector<LabelSet> label(const std::vector<Utterance>& utterances) const override {
    std::vector<LabelSet> out;
    for (const auto& u : utterances) {
      auto it = table_.find(u.text);
      if (it != table_.end()) {
        out.push_back(it->second);
      } else {
        LabelSet none;
        none.add("No Finding", Status::kPresent);
        out.push_back(none);
      }
    }
    return out;
  }

 private:
  std::map<std::string, LabelSet> table_;
};

// Random label table over `phrase_pool()` using a handful of leaves.
inline std::map<std::string, LabelSet> random_table(std::mt19937& rng) {
  static const std::vector<std::string> kLeaves = {
      "Pneumonia", "Atelectasis", "Edema", "Cardiomegaly", "Simple pleural effusion",
      "Simple pneumothorax", "Emphysema", "PICC line", "Acute rib fracture", "Hernia"};
  std::map<std::string, LabelSet> table;
  for (const auto& text : phrase_pool()) {
    LabelSet s;
    const int n = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int i = 0; i < n; ++i) {
      s.set(kLeaves[std::uniform_int_distribution<size_t>(0, kLeaves.size() - 1)(rng)],
            static_cast<Status>(std::uniform_int_distribution<int>(0, 2)(rng)));
    }
    table[text] = s;
  }
  return table;
}

}  // namespace srrg::testing
