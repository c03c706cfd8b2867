#include <mutex>
#include <random>

#include "doctest.h"
#include "srrg/error.hpp"
#include "srrg/labeling.hpp"
#include "srrg/llm.hpp"
#include "srrg/text_util.hpp"
#include "support.hpp"

using namespace srrg;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::kIoError;
}

const char* kWorked = "Right perihilar consolidation, likely atypical edema, with pneumonia as a differential diagnosis.";

// Answers disease prompts by labeling each finding line with the keyword
// labeler. `drop_every` makes the n-th call forget its labels.
class FakeLlm : public LlmClient {
 public:
  explicit FakeLlm(int drop_every = 0) : drop_every_(drop_every) {}

  std::string complete(const std::string& prompt) override {
    std::lock_guard<std::mutex> lock(mu_);
    prompts.push_back(prompt);
    const auto marker = prompt.find("3) List of chest X-ray findings (one per line):\n");
    REQUIRE(marker != std::string::npos);
    std::vector<std::string> findings;
    const std::string tail = prompt.substr(marker);
    for (auto line : split_lines(tail)) findings.emplace_back(line);
    findings.erase(findings.begin());
    std::vector<LabelSet> labels;
    const bool drop = drop_every_ > 0 && prompts.size() % drop_every_ == 0;
    for (const auto& f : findings) {
      labels.push_back(drop ? LabelSet{{"No Finding", Status::kPresent}} : keyword_.label_text(f));
    }
    return "```\n" + render_disease_response(findings, labels) + "\n```";
  }

  std::vector<std::string> prompts;

 private:
  std::mutex mu_;
  int drop_every_;
  KeywordLabeler keyword_ = KeywordLabeler::bundled();
};

class ScriptedLlm : public LlmClient {
 public:
  explicit ScriptedLlm(std::vector<std::string> answers) : answers_(std::move(answers)) {}
  std::string complete(const std::string& prompt) override {
    prompts.push_back(prompt);
    return answers_.at(std::min(prompts.size() - 1, answers_.size() - 1));
  }
  std::vector<std::string> prompts;

 private:
  std::vector<std::string> answers_;
};

}  // namespace

TEST_CASE("structuring prompt matches the golden text") {
  const auto golden = testing::slurp(testing::source_path("tests/golden/structuring_prompt_example.txt"));
  CHECK(build_structuring_prompt("CHEST PA: clear lungs.") == golden);
  const auto tmpl = testing::slurp(testing::source_path("tests/golden/structuring_prompt_template.txt"));
  CHECK(tmpl.substr(0, tmpl.find("{}")) + "x" == build_structuring_prompt("x"));
  CHECK(code_of([] { build_structuring_prompt(" \n"); }) == ErrorCode::kEmptyInput);
}

TEST_CASE("disease prompt matches the golden text") {
  const auto golden = testing::slurp(testing::source_path("tests/golden/disease_prompt_example.txt"));
  const auto prompt =
      build_disease_prompt({"No pneumothorax.", "Small left pleural effusion.", "Heart size is normal."});
  CHECK(prompt == golden);
  // Instructions up to the disease list are the published ones, byte for byte.
  const auto published = testing::slurp(testing::source_path("tests/golden/disease_prompt_published.txt"));
  const std::string head = "2) List of possible diseases:\n";
  CHECK(prompt.substr(0, prompt.find(head)) == published.substr(0, published.find(head)));
  for (const auto& leaf : Taxonomy::bundled().leaves()) CHECK(prompt.find("\n- " + leaf + "\n") != std::string::npos);
  CHECK(code_of([] { build_disease_prompt({}); }) == ErrorCode::kEmptyInput);
  CHECK(code_of([] { build_disease_prompt({"a\nb"}); }) == ErrorCode::kNewlineInUtterance);
}

TEST_CASE("worked annotation example") {
  const std::string line = std::string(kWorked) +
                           " => 1. Perihilar airspace opacity (Present) 2. Edema (Uncertain) 3. Pneumonia (Uncertain)";
  const auto r = parse_disease_response(line, {kWorked});
  REQUIRE(r.labels.size() == 1);
  CHECK(r.labels[0] == LabelSet{{"Perihilar airspace opacity", Status::kPresent},
                                {"Edema", Status::kUncertain},
                                {"Pneumonia", Status::kUncertain}});
  CHECK(r.warnings.empty());
}

TEST_CASE("disease response parsing") {
  const auto ok = parse_disease_response("a => 1. No Finding\n\nb => 1. edema (absent)", {"a", "b"});
  CHECK(ok.labels[0] == LabelSet{{"No Finding", Status::kPresent}});
  CHECK(ok.labels[1] == LabelSet{{"Edema", Status::kAbsent}});
  // Names containing digits and dots survive item splitting.
  const auto multi = parse_disease_response("a => 1. Edema (Present) 2. Pneumonia (Absent)", {"a"});
  CHECK(multi.labels[0].size() == 2);
  CHECK(parse_disease_response("other text => 1. No Finding", {"a"}).warnings.size() == 1);

  CHECK(code_of([] { parse_disease_response("a => 1. No Finding", {"a", "b"}); }) == ErrorCode::kCountMismatch);
  CHECK(code_of([] { parse_disease_response("a - Edema (Present)", {"a"}); }) == ErrorCode::kLineWithoutArrow);
  CHECK(code_of([] { parse_disease_response("a => 1. Bronchitis (Present)", {"a"}); }) ==
        ErrorCode::kUnknownDisease);
  CHECK(code_of([] { parse_disease_response("a => 1. Edema (Maybe)", {"a"}); }) == ErrorCode::kUnknownStatus);
  CHECK(code_of([] { parse_disease_response("a => 1. Edema", {"a"}); }) == ErrorCode::kUnknownStatus);
  // Upper labels are not valid answers.
  CHECK(code_of([] { parse_disease_response("a => 1. Consolidation (Present)", {"a"}); }) ==
        ErrorCode::kUnknownDisease);
}

TEST_CASE("render and parse are inverse") {
  std::mt19937 rng(3);
  const auto table = testing::random_table(rng);
  std::vector<std::string> findings;
  std::vector<LabelSet> labels;
  for (const auto& [text, set] : table) {
    findings.push_back(text);
    labels.push_back(set.empty() ? LabelSet{{"No Finding", Status::kPresent}} : set);
  }
  CHECK(parse_disease_response(render_disease_response(findings, labels), findings).labels == labels);
}

TEST_CASE("consensus matches the brute-force oracle on every vote triple") {
  // Each voter names any subset of three diseases, all Present: 8^3 cases.
  const std::vector<std::string> universe = {"Edema", "Pneumonia", "Atelectasis"};
  auto subset = [&](int mask) {
    LabelSet s;
    for (int i = 0; i < 3; ++i) {
      if (mask & (1 << i)) s.add(universe[i], Status::kPresent);
    }
    return s;
  };
  int cases = 0, mismatches = 0;
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      for (int c = 0; c < 8; ++c) {
        LabelSet want;
        for (int i = 0; i < 3; ++i) {
          const int votes = ((a >> i) & 1) + ((b >> i) & 1) + ((c >> i) & 1);
          if (votes >= 2) want.add(universe[i], Status::kPresent);
        }
        if (consensus({subset(a), subset(b), subset(c)}) != want) ++mismatches;
        ++cases;
      }
    }
  }
  CHECK(cases == 512);
  CHECK(mismatches == 0);
}

TEST_CASE("consensus statuses and voter count") {
  const LabelSet a{{"Edema", Status::kUncertain}};
  const LabelSet b{{"Edema", Status::kPresent}};
  const LabelSet c{{"Pneumonia", Status::kPresent}};
  CHECK(consensus({a, b, c}) == LabelSet{{"Edema", Status::kPresent}});
  CHECK(consensus({a, a, a}) == a);
  CHECK(consensus({a, c, LabelSet{}}).empty());
  CHECK(code_of([&] { consensus({a, b}); }) == ErrorCode::kWrongVoterCount);
}

TEST_CASE("discard unlabeled") {
  Utterance u{"x", UtteranceOrigin::impression_rank(1), "s"};
  auto kept = discard_unlabeled({{u, LabelSet{}}, {u, LabelSet{{"Edema", Status::kPresent}}}});
  CHECK(kept.size() == 1);
}

TEST_CASE("keyword labeler") {
  const auto k = KeywordLabeler::bundled();
  CHECK(k.label_text("No pneumothorax.") == LabelSet{{"Simple pneumothorax", Status::kAbsent}});
  CHECK(k.label_text("Possible pneumonia.") == LabelSet{{"Pneumonia", Status::kUncertain}});
  CHECK(k.label_text("Mild cardiomegaly.") == LabelSet{{"Cardiomegaly", Status::kPresent}});
  CHECK(k.label_text("Heart size is normal.") == LabelSet{{"No Finding", Status::kPresent}});
  // Longest phrase wins over the words inside it.
  CHECK(k.label_text("Subcutaneous emphysema.") == LabelSet{{"Subcutaneous Emphysema", Status::kPresent}});
  // Word boundaries: "edematous" is not "edema".
  CHECK_FALSE(k.label_text("Edematous soft tissue.").contains("Edema"));
  for (const auto& set : k.label({{"Small left pleural effusion.", {}, "s"}, {"Emphysema.", {}, "s"}})) {
    for (const auto& [d, st] : set) CHECK(Taxonomy::bundled().is_leaf(d));
  }
  CHECK(code_of([] { KeywordLabeler({}, Taxonomy::bundled()); }) == ErrorCode::kEmptyLexicon);
  CHECK(code_of([] { KeywordLabeler({{"foo", "Consolidation"}}, Taxonomy::bundled()); }) ==
        ErrorCode::kUnknownDisease);
}

TEST_CASE("prediction labeler") {
  const std::string rows =
      R"({"study_id":"s1","origin":{"kind":"impression","index":1},"labels":[{"disease":"edema","status":"Present"}]})"
      "\n"
      R"({"study_id":"s1","origin":{"kind":"finding","category":"Pleura","index":1},"labels":[]})"
      "\n";
  const auto p = PredictionLabeler::from_jsonl(rows, Taxonomy::bundled());
  CHECK(p.size() == 2);
  const Utterance imp{"x", UtteranceOrigin::impression_rank(1), "s1"};
  const Utterance missing{"x", UtteranceOrigin::impression_rank(2), "s1"};
  CHECK(p.label({imp})[0] == LabelSet{{"Edema", Status::kPresent}});
  CHECK(code_of([&] { p.label({missing}); }) == ErrorCode::kUnknownUtterance);
  CHECK(code_of([&] { PredictionLabeler::from_jsonl(rows + rows, Taxonomy::bundled()); }) ==
        ErrorCode::kSchemaViolation);
  CHECK(code_of([&] { PredictionLabeler::from_jsonl(rows, Taxonomy::bundled(), {"s1#impression/1"}); }) ==
        ErrorCode::kUnknownUtterance);
  CHECK(code_of([] { PredictionLabeler::from_jsonl("{not json}\n", Taxonomy::bundled()); }) ==
        ErrorCode::kSchemaViolation);
  const Utterance u{"Edema.", UtteranceOrigin::finding(AnatomicCategory::kPleura, 2), "s9"};
  const auto row = prediction_row(u, LabelSet{{"Edema", Status::kAbsent}});
  CHECK(PredictionLabeler::from_jsonl(row.dump(), Taxonomy::bundled()).label({u})[0] ==
        LabelSet{{"Edema", Status::kAbsent}});
}

TEST_CASE("llm labeler with one and three voters") {
  std::vector<Utterance> us = {{"Possible pneumonia.", {}, "s"}, {"No pneumothorax.", {}, "s"}, {"Emphysema.", {}, "s"}};
  FakeLlm single;
  const auto one = LlmLabeler(single, Taxonomy::bundled(), 1).label(us);
  CHECK(single.prompts.size() == 1);
  CHECK(one[0] == LabelSet{{"Pneumonia", Status::kUncertain}});

  // One of three voters answers No Finding everywhere; the majority wins.
  FakeLlm noisy(3);
  const auto three = LlmLabeler(noisy, Taxonomy::bundled(), 3).label(us);
  CHECK(noisy.prompts.size() == 3);
  CHECK(three == one);

  FakeLlm batched;
  LlmLabeler(batched, Taxonomy::bundled(), 1, 2).label(us);
  CHECK(batched.prompts.size() == 2);

  CHECK(code_of([&] { LlmLabeler(single, Taxonomy::bundled(), 2); }) == ErrorCode::kWrongVoterCount);
}

TEST_CASE("replay and recording clients") {
  testing::TempDir dir;
  FakeLlm live;
  {
    RecordingClient rec(live, dir.file("rec.jsonl"));
    const std::vector<Utterance> us = {{"Mild cardiomegaly.", {}, "s"}};
    LlmLabeler(rec, Taxonomy::bundled(), 3).label(us);
  }
  auto replay = ReplayClient::from_file(dir.file("rec.jsonl"));
  const std::vector<Utterance> us = {{"Mild cardiomegaly.", {}, "s"}};
  const auto first = LlmLabeler(*replay, Taxonomy::bundled(), 3).label(us);
  const auto second = LlmLabeler(*replay, Taxonomy::bundled(), 3).label(us);
  CHECK(first == second);
  CHECK(first[0] == LabelSet{{"Cardiomegaly", Status::kPresent}});
  CHECK(code_of([&] { replay->complete("never seen"); }) == ErrorCode::kLlmFailure);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("restructure retries once with feedback") {
  ScriptedLlm llm({"Findings:\nBones:\n- x", "```\nFindings:\nPleura:\n- No pneumothorax.\n```"});
  const auto r = restructure("No pneumothorax.", llm);
  CHECK(r.ok());
  CHECK(r.attempts == 2);
  REQUIRE(llm.prompts.size() == 2);
  CHECK(llm.prompts[1].find("UnknownAnatomicHeader") != std::string::npos);

  ScriptedLlm bad({"Bones:\n- x"});
  const auto failed = restructure("x", bad);
  CHECK_FALSE(failed.ok());
  CHECK(failed.attempts == 2);
}
