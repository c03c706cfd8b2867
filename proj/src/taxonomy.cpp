#include "srrg/taxonomy.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "bundled_data.hpp"
#include "srrg/error.hpp"
#include "srrg/text_util.hpp"

namespace srrg {

namespace {

constexpr size_t kMaxDepth = 64;

void add_subtree(const nlohmann::json& j, std::optional<size_t> parent, size_t depth,
                 std::vector<DiseaseNode>& nodes, std::unordered_map<std::string, size_t>& by_name) {
  if (depth > kMaxDepth) throw Error(ErrorCode::kCycleDetected, "taxonomy nesting too deep");
  if (!j.is_object() || !j.contains("name") || !j.at("name").is_string()) {
    throw Error(ErrorCode::kSchemaViolation, "taxonomy node needs a string \"name\"");
  }
  std::string name = std::string(trim(j.at("name").get<std::string>()));
  if (name.empty()) throw Error(ErrorCode::kSchemaViolation, "taxonomy node with empty name");
  if (auto it = by_name.find(name); it != by_name.end()) {
    // A name repeated on its own ancestor path would make the tree cyclic.
    for (auto up = parent; up; up = nodes[*up].parent) {
      if (*up == it->second) throw Error(ErrorCode::kCycleDetected, "taxonomy cycle through: " + name);
    }
    throw Error(ErrorCode::kDuplicateName, "duplicate taxonomy name: " + name);
  }
  const size_t index = nodes.size();
  nodes.push_back({name, parent, {}});
  by_name.emplace(std::move(name), index);
  if (parent) nodes[*parent].children.push_back(index);
  if (j.contains("children")) {
    const auto& children = j.at("children");
    if (!children.is_array()) throw Error(ErrorCode::kSchemaViolation, "\"children\" must be an array");
    for (const auto& child : children) add_subtree(child, index, depth + 1, nodes, by_name);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view status_name(Status status) {
  switch (status) {
    case Status::kPresent: return "Present";
    case Status::kAbsent: return "Absent";
    case Status::kUncertain: return "Uncertain";
  }
  return "Unknown";
}

std::optional<Status> status_from_name(std::string_view name) {
  const std::string lower = to_lower(trim(name));
  if (lower == "present") return Status::kPresent;
  if (lower == "absent") return Status::kAbsent;
  if (lower == "uncertain") return Status::kUncertain;
  return std::nullopt;
}

LabelSet::LabelSet(std::initializer_list<GranularLabel> labels) {
  for (const auto& label : labels) add(label);
}

void LabelSet::add(const std::string& disease, Status status) {
  auto [it, inserted] = labels_.emplace(disease, status);
  if (!inserted) it->second = merge_status(it->second, status);
}

std::optional<Status> LabelSet::status_of(const std::string& disease) const {
  auto it = labels_.find(disease);
  if (it == labels_.end()) return std::nullopt;
  return it->second;
}

std::set<std::string> LabelSet::diseases() const {
  std::set<std::string> out;
  for (const auto& [disease, status] : labels_) out.insert(disease);
  return out;
}

std::vector<GranularLabel> LabelSet::labels() const {
  std::vector<GranularLabel> out;
  for (const auto& [disease, status] : labels_) out.push_back({disease, status});
  return out;
}

nlohmann::json labels_to_json(const LabelSet& labels) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [disease, status] : labels) {
    out.push_back({{"disease", disease}, {"status", status_name(status)}});
  }
  return out;
}

LabelSet labels_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kSchemaViolation, "labels must be an array");
  LabelSet out;
  for (const auto& row : j) {
    if (!row.is_object() || !row.contains("disease")) {
      throw Error(ErrorCode::kSchemaViolation, "label needs a \"disease\"");
    }
    Status status = Status::kPresent;
    if (row.contains("status")) {
      auto parsed = status_from_name(row.at("status").get<std::string>());
      if (!parsed) {
        throw Error(ErrorCode::kUnknownStatus, "unknown status: " + row.at("status").get<std::string>());
      }
      status = *parsed;
    }
    out.add(row.at("disease").get<std::string>(), status);
  }
  return out;
}

std::string_view label_space_name(LabelSpace space) {
  switch (space) {
    case LabelSpace::kLeaves: return "leaves";
    case LabelSpace::kUpper: return "upper";
    case LabelSpace::kLeavesWithStatus: return "leaves_with_status";
    case LabelSpace::kUpperWithStatus: return "upper_with_status";
  }
  return "unknown";
}

std::optional<LabelSpace> label_space_from_name(std::string_view name) {
  const std::string lower = to_lower(name);
  if (lower == "leaves") return LabelSpace::kLeaves;
  if (lower == "upper") return LabelSpace::kUpper;
  if (lower == "leaves_with_status" || lower == "leaves-status") return LabelSpace::kLeavesWithStatus;
  if (lower == "upper_with_status" || lower == "upper-status") return LabelSpace::kUpperWithStatus;
  return std::nullopt;
}

Taxonomy Taxonomy::from_json(const nlohmann::json& j) {
  Taxonomy t;
  if (j.is_array()) {
    if (j.empty()) throw Error(ErrorCode::kEmptyTree, "taxonomy has no nodes");
    for (const auto& root : j) add_subtree(root, std::nullopt, 0, t.nodes_, t.by_name_);
  } else if (j.is_object()) {
    add_subtree(j, std::nullopt, 0, t.nodes_, t.by_name_);
  } else {
    throw Error(ErrorCode::kEmptyTree, "taxonomy must be an object or an array of trees");
  }
  for (size_t i = 0; i < t.nodes_.size(); ++i) {
    const auto& node = t.nodes_[i];
    if (!node.parent) t.roots_.push_back(i);
    const std::string key = normalize_label_key(node.name);
    if (!t.by_key_.emplace(key, i).second) {
      throw Error(ErrorCode::kDuplicateName, "taxonomy names collide after normalization: " + node.name);
    }
    if (node.children.empty()) {
      t.leaves_.push_back(node.name);
      const std::string upper = node.parent ? t.nodes_[*node.parent].name : node.name;
      if (std::find(t.uppers_.begin(), t.uppers_.end(), upper) == t.uppers_.end()) {
        t.uppers_.push_back(upper);
      }
    }
  }
  return t;
}

Taxonomy Taxonomy::from_file(const std::string& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kSchemaViolation, path + ": " + e.what());
  }
  return from_json(j);
}

const Taxonomy& Taxonomy::bundled() {
  static const Taxonomy kBundled = from_json(nlohmann::json::parse(bundled::kTaxonomyJson));
  return kBundled;
}

std::string_view Taxonomy::bundled_json_text() { return bundled::kTaxonomyJson; }

bool Taxonomy::contains(std::string_view name) const { return by_name_.count(std::string(name)) > 0; }

bool Taxonomy::is_leaf(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it != by_name_.end() && nodes_[it->second].children.empty();
}

bool Taxonomy::is_upper(std::string_view name) const {
  return std::find(uppers_.begin(), uppers_.end(), name) != uppers_.end();
}

std::optional<std::string> Taxonomy::canonical_name(std::string_view name) const {
  if (contains(name)) return std::string(name);
  auto it = by_key_.find(normalize_label_key(name));
  if (it == by_key_.end()) return std::nullopt;
  return nodes_[it->second].name;
}

const DiseaseNode& Taxonomy::node(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw Error(ErrorCode::kUnknownLabel, "unknown label: " + std::string(name));
  return nodes_[it->second];
}

std::string Taxonomy::upper_of(std::string_view leaf) const {
  const auto& n = node(leaf);
  if (!n.children.empty()) throw Error(ErrorCode::kNotALeaf, "not a leaf: " + std::string(leaf));
  return n.parent ? nodes_[*n.parent].name : n.name;
}

std::optional<std::string> Taxonomy::parent_of(std::string_view name) const {
  const auto& n = node(name);
  if (!n.parent) return std::nullopt;
  return nodes_[*n.parent].name;
}

LabelSet Taxonomy::project(const LabelSet& labels, LabelSpace space) const {
  const bool upper = space == LabelSpace::kUpper || space == LabelSpace::kUpperWithStatus;
  const bool keep_status = space_has_status(space);
  LabelSet out;
  for (const auto& [disease, status] : labels) {
    const auto& n = node(disease);
    std::string target;
    if (n.children.empty()) {
      target = upper ? upper_of(disease) : disease;
    } else if (upper && is_upper(disease)) {
      target = disease;
    } else {
      throw Error(ErrorCode::kNotALeaf, "cannot project non-leaf label: " + disease);
    }
    Status s = keep_status ? status : Status::kPresent;
    if (target == kNoFinding) s = Status::kPresent;
    out.add(target, s);
  }
  return out;
}

std::string class_name(const std::string& disease, Status status, bool with_status) {
  if (!with_status || disease == kNoFinding) return disease;
  return disease + " (" + std::string(status_name(status)) + ")";
}

std::set<std::string> Taxonomy::classes(const LabelSet& labels, LabelSpace space) const {
  std::set<std::string> out;
  for (const auto& [disease, status] : project(labels, space)) {
    out.insert(class_name(disease, status, space_has_status(space)));
  }
  return out;
}

std::vector<std::string> Taxonomy::class_universe(LabelSpace space) const {
  const bool upper = space == LabelSpace::kUpper || space == LabelSpace::kUpperWithStatus;
  const auto& names = upper ? uppers_ : leaves_;
  std::vector<std::string> out;
  for (const auto& name : names) {
    if (!space_has_status(space) || name == kNoFinding) {
      out.push_back(name);
      continue;
    }
    for (Status s : {Status::kPresent, Status::kAbsent, Status::kUncertain}) {
      out.push_back(class_name(name, s, true));
    }
  }
  return out;
}

nlohmann::json Taxonomy::to_json() const {
  std::function<nlohmann::json(size_t)> emit = [&](size_t i) {
    nlohmann::json j = {{"name", nodes_[i].name}};
    if (!nodes_[i].children.empty()) {
      j["children"] = nlohmann::json::array();
      for (size_t c : nodes_[i].children) j["children"].push_back(emit(c));
    }
    return j;
  };
  nlohmann::json out = nlohmann::json::array();
  for (size_t r : roots_) out.push_back(emit(r));
  return out;
}

LabelSet normalize_labels(const LabelSet& labels, const Taxonomy& taxonomy) {
  LabelSet out;
  for (const auto& [disease, status] : labels) {
    auto canonical = taxonomy.canonical_name(disease);
    if (!canonical) throw Error(ErrorCode::kUnknownDisease, "unknown disease: " + disease);
    out.add(*canonical, *canonical == kNoFinding ? Status::kPresent : status);
  }
  return out;
}

ChexbertMapping ChexbertMapping::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kSchemaViolation, "CheXbert mapping must be an object");
  const auto& universe = chexbert_classes();
  ChexbertMapping m;
  for (const auto& [name, targets] : j.items()) {
    if (!targets.is_array()) {
      throw Error(ErrorCode::kSchemaViolation, "mapping for " + name + " must be an array");
    }
    auto& slot = m.entries_[name];
    for (const auto& target : targets) {
      const auto cls = target.get<std::string>();
      if (std::find(universe.begin(), universe.end(), cls) == universe.end()) {
        throw Error(ErrorCode::kSchemaViolation, "not a CheXbert class: " + cls);
      }
      slot.insert(cls);
    }
  }
  return m;
}

ChexbertMapping ChexbertMapping::from_file(const std::string& path) {
  return from_json(nlohmann::json::parse(read_file(path)));
}

const ChexbertMapping& ChexbertMapping::bundled() {
  static const ChexbertMapping kBundled = from_json(nlohmann::json::parse(bundled::kChexbertMappingJson));
  return kBundled;
}

ChexbertProjection map_to_chexbert(const LabelSet& labels, const ChexbertMapping& mapping) {
  ChexbertProjection out;
  for (const auto& [disease, status] : labels) {
    auto it = mapping.entries().find(disease);
    if (it == mapping.entries().end()) {
      out.unmapped.push_back(disease);
      continue;
    }
    out.classes.insert(it->second.begin(), it->second.end());
  }
  return out;
}

}  // namespace srrg
