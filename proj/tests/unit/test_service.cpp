#include <set>
#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "srrg/corpus.hpp"
#include "srrg/review.hpp"
#include "srrg/service.hpp"
#include "support.hpp"

using namespace srrg;
using nlohmann::json;
using testing::TempDir;

namespace {

const char* kRows =
    R"({"study_id":"a1","source":"fx","original_text":"Lungs clear.","structured_text":"Findings:\nLungs and Airways:\n- Lungs are clear.\nImpression:\n1. No acute process.","split":"test_reviewed"})"
    "\n"
    R"({"study_id":"a2","source":"fx","original_text":"Small effusion.","structured_text":"Findings:\nPleura:\n- Small left pleural effusion.","split":"test_reviewed"})"
    "\n"
    R"({"study_id":"t1","source":"fx","original_text":"train only","split":"train"})"
    "\n";

class Harness {
 public:
  explicit Harness(ServiceConfig config = {}) {
    store_ = CorpusStore::open(dir_.path());
    store_->import_text(kRows, ImportFormat::kJsonl);
    store_->upsert_utterances({{"a1", UtteranceOrigin::finding(AnatomicCategory::kLungsAndAirways, 1),
                                "Lungs are clear.", LabelSet{{"No Finding", Status::kPresent}},
                                Provenance::kConsensus}});
    config.host = "127.0.0.1";
    config.port = 0;
    service_ = std::make_unique<ReviewService>(*store_, Taxonomy::bundled(),
                                               std::string(Taxonomy::bundled_json_text()), config);
    port_ = service_->bind();
    thread_ = std::thread([this] { service_->run(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  ~Harness() {
    service_->stop();
    thread_.join();
  }

  httplib::Client& client() { return *client_; }
  CorpusStore& store() { return *store_; }
  const TempDir& dir() const { return dir_; }

  httplib::Result post_review(const std::string& id, const std::string& text, int expected,
                              json corrections = json::array()) {
    json body = {{"edited_text", text}, {"expected_version", expected}, {"reviewer", "r1"},
                 {"label_corrections", corrections}};
    return client_->Post("/studies/" + id + "/review", body.dump(), "application/json");
  }

 private:
  TempDir dir_;
  std::unique_ptr<CorpusStore> store_;
  std::unique_ptr<ReviewService> service_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_CASE("health and version header") {
  Harness h;
  auto r = h.client().Get("/healthz");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(r->get_header_value("X-SRRG-Api") == "1");
  CHECK(r->get_header_value("Content-Type") == "application/json");
}

TEST_CASE("task dispensing") {
  Harness h;
  auto first = h.client().Get("/tasks/next?reviewer=r1");
  auto second = h.client().Get("/tasks/next?reviewer=r2");
  REQUIRE(first);
  REQUIRE(second);
  CHECK(first->status == 200);
  const auto t1 = json::parse(first->body), t2 = json::parse(second->body);
  CHECK(t1["study_id"] == "a1");
  CHECK(t2["study_id"] == "a2");
  CHECK(t1["structured_text"] == "Findings:\nLungs and Airways:\n- Lungs are clear.\nImpression:\n1. No acute process.");
  CHECK(t1["utterances"][0]["labels"][0]["disease"] == "No Finding");
  CHECK(t1["version"] == 0);
  // Only test_reviewed studies are handed out; both are leased now.
  auto third = h.client().Get("/tasks/next?reviewer=r3");
  CHECK(third->status == 404);
  CHECK(json::parse(third->body)["error"]["code"] == "NoTasks");
  CHECK(h.client().Get("/tasks/next")->status == 400);
}

TEST_CASE("concurrent polls never share a live lease") {
  Harness h;
  for (int i = 0; i < 20; ++i) {
    h.store().import_text(json{{"study_id", "c" + std::to_string(100 + i)}, {"source", "fx"},
                               {"original_text", "x"}, {"split", "test_reviewed"}}
                              .dump(),
                          ImportFormat::kJsonl);
  }
  std::mutex mu;
  std::multiset<std::string> got;
  std::vector<std::thread> ts;
  for (int w = 0; w < 4; ++w) {
    ts.emplace_back([&, w] {
      httplib::Client c(h.client().host(), h.client().port());
      for (int k = 0; k < 8; ++k) {
        auto r = c.Get("/tasks/next?reviewer=w" + std::to_string(w));
        if (r && r->status == 200) {
          std::lock_guard<std::mutex> lock(mu);
          got.insert(json::parse(r->body)["study_id"].get<std::string>());
        }
      }
    });
  }
  for (auto& t : ts) t.join();
  CHECK(got.size() == 22);
  CHECK(std::set<std::string>(got.begin(), got.end()).size() == got.size());
}

TEST_CASE("review submission, conflicts and diff parity") {
  Harness h;
  const std::string edited = "Findings:\nLungs and Airways:\n- Lungs are clear bilaterally.\nImpression:\n1. No acute process.";
  auto r = h.post_review("a1", edited, 0,
                         json::array({{{"utterance_key", "a1#findings/Lungs and Airways/1"},
                                       {"labels", json::array({{{"disease", "No Finding"}, {"status", "Present"}}})}}}));
  REQUIRE(r);
  CHECK(r->status == 200);
  const auto body = json::parse(r->body);
  CHECK(body["version"] == 1);
  CHECK(body["diff"]["replacements"] == 2);  // "clear." -> "clear bilaterally."

  auto diff = h.client().Get("/studies/a1/diff");
  CHECK(json::parse(diff->body) == body["diff"]);
  CHECK(diff->body == study_diff_json(h.store(), "a1").dump());

  CHECK(h.post_review("a1", edited, 0)->status == 409);
  CHECK(h.post_review("a1", "Findings:\nBones:\n- x", 1)->status == 422);
  CHECK(h.post_review("zz", edited, 0)->status == 404);
  auto bad = h.client().Post("/studies/a1/review", "{\"expected_version\":1}", "application/json");
  CHECK(bad->status == 400);
  CHECK(h.client().Post("/studies/a1/review", "not json", "application/json")->status == 400);

  auto stored = h.client().Get("/studies/a1/review");
  const auto rec = json::parse(stored->body);
  CHECK(rec["edited_text"] == edited);
  CHECK(rec["label_corrections"][0]["utterance_key"] == "a1#findings/Lungs and Airways/1");
  CHECK(h.client().Get("/studies/a2/review")->status == 404);
  CHECK(h.client().Get("/studies/a2/diff")->status == 404);

  // A reviewed study is no longer dispensed.
  auto next = h.client().Get("/tasks/next?reviewer=r9");
  CHECK(json::parse(next->body)["study_id"] == "a2");
}

TEST_CASE("summary and taxonomy") {
  Harness h;
  CHECK(h.client().Get("/summary")->status == 404);
  h.post_review("a1", "Impression:\n1. No acute process.", 0);
  auto s = h.client().Get("/summary");
  REQUIRE(s->status == 200);
  CHECK(s->body == summary_json(h.store()).dump());
  CHECK(json::parse(s->body)["review_summary"]["total_studies"] == 1);

  auto t = h.client().Get("/taxonomy");
  CHECK(t->status == 200);
  CHECK(t->body == testing::slurp(testing::source_path("data/taxonomy.json")));
}

TEST_CASE("live parse endpoint") {
  Harness h;
  auto ok = h.client().Post("/parse", json{{"text", "Impression:\n1. Fine."}}.dump(), "application/json");
  CHECK(json::parse(ok->body)["ok"] == true);
  auto bad = h.client().Post("/parse", json{{"text", "Findings:\nBones:\n- x"}}.dump(), "application/json");
  const auto b = json::parse(bad->body);
  CHECK(b["ok"] == false);
  CHECK(b["issues"][0]["code"] == "UnknownAnatomicHeader");
}

TEST_CASE("bearer tokens") {
  TempDir tokens;
  testing::spit(tokens.file("tokens.txt"), "secret-1 alice\nsecret-2 bob\n");
  ServiceConfig cfg;
  cfg.token_file = tokens.file("tokens.txt");
  Harness h(cfg);
  CHECK(h.client().Get("/summary")->status == 401);
  CHECK(h.client().Get("/healthz")->status == 200);
  h.client().set_bearer_token_auth("secret-2");
  auto task = h.client().Get("/tasks/next");
  REQUIRE(task->status == 200);
  CHECK(json::parse(task->body)["reviewer"] == "bob");
  h.post_review("a1", "Impression:\n1. x", 0);
  CHECK(h.store().review("a1")->reviewer == "bob");
  h.client().set_bearer_token_auth("wrong");
  CHECK(h.client().Get("/taxonomy")->status == 401);
}

TEST_CASE("cors preflight") {
  Harness h;
  auto r = h.client().Options("/summary");
  REQUIRE(r);
  CHECK(r->status == 204);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "*");
}
