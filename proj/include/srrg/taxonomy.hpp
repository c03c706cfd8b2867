#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

namespace srrg {

enum class Status { kAbsent, kUncertain, kPresent };

std::string_view status_name(Status status);
std::optional<Status> status_from_name(std::string_view name);

// Precedence merge: Present > Uncertain > Absent.
inline Status merge_status(Status a, Status b) { return a < b ? b : a; }

inline constexpr std::string_view kNoFinding = "No Finding";

struct GranularLabel {
  std::string disease;
  Status status = Status::kPresent;
  friend bool operator==(const GranularLabel&, const GranularLabel&) = default;
};

// At most one status per disease; iteration is ordered by disease name.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<GranularLabel> labels);

  // Inserts or merges with the existing status by precedence.
  void add(const std::string& disease, Status status);
  void add(const GranularLabel& label) { add(label.disease, label.status); }
  // Replaces any existing status.
  void set(const std::string& disease, Status status) { labels_[disease] = status; }

  bool contains(const std::string& disease) const { return labels_.count(disease) > 0; }
  std::optional<Status> status_of(const std::string& disease) const;
  bool empty() const { return labels_.empty(); }
  size_t size() const { return labels_.size(); }
  std::set<std::string> diseases() const;
  std::vector<GranularLabel> labels() const;

  auto begin() const { return labels_.begin(); }
  auto end() const { return labels_.end(); }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::map<std::string, Status> labels_;
};

nlohmann::json labels_to_json(const LabelSet& labels);  // [{"disease","status"}]
LabelSet labels_from_json(const nlohmann::json& j);

enum class LabelSpace { kLeaves, kUpper, kLeavesWithStatus, kUpperWithStatus };

std::string_view label_space_name(LabelSpace space);
std::optional<LabelSpace> label_space_from_name(std::string_view name);
inline bool space_has_status(LabelSpace space) {
  return space == LabelSpace::kLeavesWithStatus || space == LabelSpace::kUpperWithStatus;
}

struct DiseaseNode {
  std::string name;
  std::optional<size_t> parent;  // index into Taxonomy::nodes()
  std::vector<size_t> children;
};

// Immutable disease forest. Leaves are nodes without children; the upper label
// of a leaf is its parent, or the leaf itself when it is a root.
class Taxonomy {
 public:
  // Accepts a single tree {"name","children"} or an array of such trees.
  static Taxonomy from_json(const nlohmann::json& j);
  static Taxonomy from_file(const std::string& path);
  // The tree shipped with the library.
  static const Taxonomy& bundled();
  static std::string_view bundled_json_text();

  const std::vector<DiseaseNode>& nodes() const { return nodes_; }
  const std::vector<size_t>& roots() const { return roots_; }
  // Leaf names in depth-first document order.
  const std::vector<std::string>& leaves() const { return leaves_; }
  // Distinct upper labels in first-seen leaf order.
  const std::vector<std::string>& uppers() const { return uppers_; }

  bool contains(std::string_view name) const;
  bool is_leaf(std::string_view name) const;
  bool is_upper(std::string_view name) const;

  // Canonical spelling for a case/dash-insensitive match, if any.
  std::optional<std::string> canonical_name(std::string_view name) const;

  std::string upper_of(std::string_view leaf) const;
  std::optional<std::string> parent_of(std::string_view name) const;

  // Maps leaves to the requested space. Upper-level names pass through
  // unchanged in upper spaces so projection is idempotent. Status-free
  // spaces normalize every status to Present.
  LabelSet project(const LabelSet& labels, LabelSpace space) const;

  // Class identifiers for scoring: "Edema" or "Edema (Present)".
  std::set<std::string> classes(const LabelSet& labels, LabelSpace space) const;

  // Full class universe for a space. Status spaces exclude the status
  // variants of No Finding, which carries a single class.
  std::vector<std::string> class_universe(LabelSpace space) const;

  nlohmann::json to_json() const;

 private:
  const DiseaseNode& node(std::string_view name) const;

  std::vector<DiseaseNode> nodes_;
  std::vector<size_t> roots_;
  std::unordered_map<std::string, size_t> by_name_;
  std::unordered_map<std::string, size_t> by_key_;
  std::vector<std::string> leaves_;
  std::vector<std::string> uppers_;
};

std::string class_name(const std::string& disease, Status status, bool with_status);

// Canonicalizes disease spellings and applies the No Finding rule: its status
// is always Present.
LabelSet normalize_labels(const LabelSet& labels, const Taxonomy& taxonomy);

inline const std::vector<std::string>& chexbert_classes() {
  static const std::vector<std::string> kClasses = {
      "Enlarged Cardiomediastinum", "Cardiomegaly", "Lung Opacity", "Lung Lesion", "Edema",
      "Consolidation", "Pneumonia", "Atelectasis", "Pneumothorax", "Pleural Effusion",
      "Pleural Other", "Fracture", "Support Devices", "No Finding"};
  return kClasses;
}

class ChexbertMapping {
 public:
  static ChexbertMapping from_json(const nlohmann::json& j);
  static ChexbertMapping from_file(const std::string& path);
  static const ChexbertMapping& bundled();

  const std::map<std::string, std::set<std::string>>& entries() const { return entries_; }

 private:
  std::map<std::string, std::set<std::string>> entries_;
};

struct ChexbertProjection {
  std::set<std::string> classes;
  std::vector<std::string> unmapped;  // input diseases without an entry
};

ChexbertProjection map_to_chexbert(const LabelSet& labels, const ChexbertMapping& mapping);

}  // namespace srrg
