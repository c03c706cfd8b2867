// srrg: command-line entry point. JSON goes to stdout, diagnostics to stderr.
// Exit codes: 0 success, 1 domain findings, 2 operational failure.

#include <pthread.h>
#include <signal.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "srrg/corpus.hpp"
#include "srrg/error.hpp"
#include "srrg/labeling.hpp"
#include "srrg/llm.hpp"
#include "srrg/metrics.hpp"
#include "srrg/parallel.hpp"
#include "srrg/report.hpp"
#include "srrg/review.hpp"
#include "srrg/service.hpp"
#include "srrg/taxonomy.hpp"
#include "srrg/text_util.hpp"
#include "srrg/textdiff.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace srrg;

namespace {

constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kFailure = 2;

struct Options {
  std::string corpus;
  std::string taxonomy;
  std::string mapping;
  std::string labeler = "keyword";
  std::string record;
  size_t workers = default_workers();
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& data) {
  if (path.empty() || path == "-") {
    std::cout << data;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << data;
}

json parse_json_file(const std::string& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, path + ": " + e.what());
  }
}

class Context {
 public:
  explicit Context(const Options& opts) : opts_(opts) {}

  const Taxonomy& taxonomy() {
    if (opts_.taxonomy.empty()) return Taxonomy::bundled();
    if (!taxonomy_) taxonomy_ = Taxonomy::from_file(opts_.taxonomy);
    return *taxonomy_;
  }

  std::string taxonomy_text() {
    return opts_.taxonomy.empty() ? std::string(Taxonomy::bundled_json_text())
                                  : read_file(opts_.taxonomy);
  }

  const ChexbertMapping& mapping() {
    if (opts_.mapping.empty()) return ChexbertMapping::bundled();
    if (!mapping_) mapping_ = ChexbertMapping::from_file(opts_.mapping);
    return *mapping_;
  }

  CorpusStore& store() {
    if (opts_.corpus.empty()) throw Error(ErrorCode::kFileNotFound, "--corpus is required");
    if (!store_) store_ = CorpusStore::open(opts_.corpus);
    return *store_;
  }

  // Resolves "keyword[:lexicon]", "predictions:<file>", "replay:<file>" or
  // "llm:<config.json>". Labelers stay owned by the context.
  const Labeler& labeler(const std::string& spec, int voters = 1) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "keyword") {
      auto l = arg.empty() ? KeywordLabeler::bundled(taxonomy())
                           : KeywordLabeler::from_file(arg, taxonomy());
      labelers_.push_back(std::make_unique<KeywordLabeler>(std::move(l)));
      provenance_ = Provenance::kBaseline;
    } else if (kind == "predictions") {
      labelers_.push_back(
          std::make_unique<PredictionLabeler>(PredictionLabeler::from_file(arg, taxonomy())));
      provenance_ = Provenance::kExternal;
    } else if (kind == "replay" || kind == "llm") {
      labelers_.push_back(std::make_unique<LlmLabeler>(client(spec), taxonomy(), voters));
      provenance_ = Provenance::kConsensus;
    } else {
      throw Error(ErrorCode::kSchemaViolation, "unknown labeler spec: " + spec);
    }
    return *labelers_.back();
  }

  LlmClient& client(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "replay") {
      clients_.push_back(ReplayClient::from_file(arg));
    } else if (kind == "llm") {
      const auto config = arg.empty() ? HttpLlmConfig{} : http_llm_config_from_json(parse_json_file(arg));
      clients_.push_back(std::make_unique<HttpLlmClient>(config));
    } else {
      throw Error(ErrorCode::kSchemaViolation, "not an llm spec: " + spec);
    }
    if (!opts_.record.empty()) {
      clients_.push_back(std::make_unique<RecordingClient>(*clients_.back(), opts_.record));
    }
    return *clients_.back();
  }

  Provenance provenance() const { return provenance_; }

 private:
  const Options& opts_;
  std::optional<Taxonomy> taxonomy_;
  std::optional<ChexbertMapping> mapping_;
  std::unique_ptr<CorpusStore> store_;
  std::vector<std::unique_ptr<LlmClient>> clients_;
  std::vector<std::unique_ptr<Labeler>> labelers_;
  Provenance provenance_ = Provenance::kExternal;
};

// ---- parse / validate -------------------------------------------------------

int cmd_parse(const std::vector<std::string>& files, bool lenient, bool validate,
              const std::string& lexicon_path) {
  DesiderataConfig config;
  if (!lexicon_path.empty()) {
    for (const auto& w : parse_json_file(lexicon_path)) config.identifier_lexicon.push_back(to_lower(w.get<std::string>()));
  }
  json out = json::array();
  int code = kOk;
  for (const auto& file : files) {
    std::string text;
    try {
      text = read_file(file);
    } catch (const Error& e) {
      std::cerr << "srrg: " << e.what() << "\n";
      return kFailure;
    }
    const auto parsed = parse_report(text, lenient ? ParseMode::kLenient : ParseMode::kStrict);
    json row = {{"file", file}};
    json issues = json::array();
    for (const auto& i : parsed.issues) issues.push_back(issue_to_json(i));
    row["issues"] = issues;
    bool ok = parsed.report.has_value() && parsed.issues.empty();
    if (parsed.report) row["report"] = report_to_json(*parsed.report);
    if (validate) {
      json violations = json::array();
      if (parsed.report) {
        for (const auto& v : validate_desiderata(*parsed.report, config)) violations.push_back(violation_to_json(v));
      }
      ok = ok && violations.empty();
      row["violations"] = violations;
    }
    row["ok"] = ok;
    if (!ok) code = kFindings;
    out.push_back(std::move(row));
  }
  std::cout << out.dump(2) << "\n";
  return code;
}

// ---- label ------------------------------------------------------------------

std::vector<Study> load_studies(Context& ctx, const std::string& in_path) {
  if (!in_path.empty()) {
    auto [rows, errors] = read_study_rows(read_file(in_path),
                                          fs::path(in_path).extension() == ".csv" ? ImportFormat::kCsv
                                                                                  : ImportFormat::kJsonl);
    for (const auto& e : errors) std::cerr << "srrg: " << in_path << ":" << e.line << ": " << e.message << "\n";
    if (!errors.empty()) throw Error(ErrorCode::kSchemaViolation, "invalid study rows in " + in_path);
    std::map<std::string, Study> by_id;
    for (auto& s : rows) by_id[s.study_id] = std::move(s);
    std::vector<Study> out;
    for (auto& [id, s] : by_id) out.push_back(std::move(s));
    return out;
  }
  return ctx.store().studies();
}

int cmd_label(Context& ctx, const Options& opts, const std::string& in_path,
              const std::string& out_path, int consensus_voters, bool write_back) {
  if (consensus_voters != 1 && consensus_voters != 3) {
    throw Error(ErrorCode::kWrongVoterCount, "--consensus must be 1 or 3");
  }
  const auto studies = load_studies(ctx, in_path);
  const Labeler& labeler = ctx.labeler(opts.labeler, consensus_voters);
  std::vector<std::vector<Utterance>> per_study(studies.size());
  for (size_t i = 0; i < studies.size(); ++i) {
    if (!studies[i].structured_text) continue;
    auto parsed = parse_report(*studies[i].structured_text, ParseMode::kLenient);
    if (!parsed.issues.empty()) {
      std::cerr << "srrg: " << studies[i].study_id << ": structured text has "
                << parsed.issues.size() << " parse issue(s)\n";
    }
    if (parsed.report) per_study[i] = extract_utterances(*parsed.report, studies[i].study_id);
  }
  std::vector<std::vector<LabelSet>> labels;
  try {
    labels = parallel_map<std::vector<LabelSet>>(studies.size(), opts.workers, [&](size_t i) {
      return per_study[i].empty() ? std::vector<LabelSet>{} : labeler.label(per_study[i]);
    });
  } catch (const Error& e) {
    throw Error(ErrorCode::kLabelerFailure, e.what());
  }
  std::string out;
  std::vector<UtteranceRecord> records;
  for (size_t i = 0; i < studies.size(); ++i) {
    std::vector<std::pair<Utterance, LabelSet>> rows;
    for (size_t k = 0; k < per_study[i].size(); ++k) rows.emplace_back(per_study[i][k], labels[i][k]);
    if (consensus_voters == 3) rows = discard_unlabeled(std::move(rows));
    for (const auto& [u, l] : rows) {
      out += prediction_row(u, l).dump() + "\n";
      records.push_back({u.study_id, u.origin, u.text, l, ctx.provenance()});
    }
  }
  write_output(out_path, out);
  if (write_back) ctx.store().upsert_utterances(records);
  std::cerr << "srrg: labeled " << records.size() << " utterance(s) in " << studies.size()
            << " stud" << (studies.size() == 1 ? "y" : "ies") << "\n";
  return kOk;
}

// ---- evaluate ---------------------------------------------------------------

std::map<std::string, std::string> load_report_texts(const std::string& path) {
  std::map<std::string, std::string> out;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.path().extension() == ".txt") out[entry.path().stem().string()] = read_file(entry.path().string());
    }
    return out;
  }
  size_t line_no = 0;
  const std::string content = read_file(path);
  for (auto line : split_lines(content)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto row = json::parse(line);
      const std::string id = row.at("study_id").get<std::string>();
      std::string text;
      for (const char* key : {"text", "structured_text", "report"}) {
        if (row.contains(key) && row[key].is_string()) {
          text = row[key].get<std::string>();
          break;
        }
      }
      out[id] = text;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

StructuredReport lenient_report(const std::string& id, const std::string& text) {
  auto parsed = parse_report(text, ParseMode::kLenient);
  if (!parsed.issues.empty()) {
    std::cerr << "srrg: " << id << ": " << parsed.issues.size() << " parse issue(s)\n";
  }
  return parsed.report.value_or(StructuredReport{});
}

int cmd_evaluate(Context& ctx, const Options& opts, const std::string& pred_path,
                 const std::string& ref_path, const std::string& gen_labeler_spec,
                 std::vector<std::string> spaces, const std::string& alignment_arg,
                 const std::string& split, const std::string& csv_path, const std::string& json_path,
                 const std::string& external_path, bool allow_partial) {
  const auto pred = load_report_texts(pred_path);
  const auto ref = load_report_texts(ref_path);
  std::vector<std::string> unmatched;
  for (const auto& [id, t] : pred) {
    if (!ref.count(id)) unmatched.push_back(id);
  }
  for (const auto& [id, t] : ref) {
    if (!pred.count(id)) unmatched.push_back(id);
  }
  if (!unmatched.empty()) {
    std::cerr << "srrg: " << unmatched.size() << " study id(s) present on one side only\n";
    if (!allow_partial) return kFailure;
  }
  std::vector<ReportPair> pairs;
  for (const auto& [id, t] : ref) {
    auto it = pred.find(id);
    if (it == pred.end()) continue;
    pairs.push_back({id, lenient_report(id, it->second), lenient_report(id, t)});
  }
  const Labeler& ref_labeler = ctx.labeler(opts.labeler);
  const Labeler& gen_labeler = gen_labeler_spec.empty() ? ref_labeler : ctx.labeler(gen_labeler_spec);

  std::map<std::string, double> external;
  if (!external_path.empty()) {
    for (const auto& [k, v] : parse_json_file(external_path).items()) external[k] = v.get<double>();
  }
  std::vector<AlignmentMode> alignments;
  if (alignment_arg == "both") {
    alignments = {AlignmentMode::kUnaligned, AlignmentMode::kAligned};
  } else if (auto a = alignment_from_name(alignment_arg)) {
    alignments = {*a};
  } else {
    throw Error(ErrorCode::kSchemaViolation, "unknown alignment: " + alignment_arg);
  }
  if (spaces.empty()) spaces = {"leaves"};
  if (spaces.size() == 1 && spaces[0] == "all") spaces = {"leaves", "upper", "leaves_with_status", "upper_with_status"};

  std::vector<ScoreReport> reports;
  json rows = json::array();
  for (const auto& name : spaces) {
    auto space = label_space_from_name(name);
    if (!space) throw Error(ErrorCode::kSchemaViolation, "unknown label space: " + name);
    for (auto alignment : alignments) {
      auto report = evaluate_pairs(pairs, gen_labeler, ref_labeler, *space, alignment, ctx.taxonomy(), opts.workers);
      report = merge_external_scores(std::move(report), external);
      for (auto& row : score_report_to_json(report, split)) rows.push_back(std::move(row));
      reports.push_back(std::move(report));
    }
  }
  json out = {{"rows", rows}, {"pairs", pairs.size()}, {"unmatched", unmatched}};
  write_output(json_path, out.dump(2) + "\n");
  if (!csv_path.empty()) write_output(csv_path, score_reports_to_csv(reports, split));
  return kOk;
}

// ---- diff / stats -----------------------------------------------------------

std::map<std::string, std::string> load_texts_for_diff(const std::string& path) {
  if (fs::path(path).extension() == ".jsonl") return load_report_texts(path);
  return {{fs::path(path).stem().string(), read_file(path)}};
}

int cmd_diff(Context& ctx, const std::string& orig, const std::string& edited,
             const std::string& study, bool text) {
  if (!study.empty()) {
    const json j = study_diff_json(ctx.store(), study);
    if (text) {
      std::cout << format_diff_stats(study_diff(ctx.store(), study));
    } else {
      std::cout << j.dump() << "\n";  // same bytes as the HTTP body
    }
    return kOk;
  }
  if (orig.empty() || edited.empty()) throw Error(ErrorCode::kFileNotFound, "--orig and --edited are required");
  auto a = load_texts_for_diff(orig);
  auto b = load_texts_for_diff(edited);
  if (a.size() == 1 && b.size() == 1 && fs::path(orig).extension() != ".jsonl") {
    b = {{a.begin()->first, b.begin()->second}};
  }
  std::vector<std::string> unpaired;
  for (const auto& [id, t] : a) {
    if (!b.count(id)) unpaired.push_back(id);
  }
  for (const auto& [id, t] : b) {
    if (!a.count(id)) unpaired.push_back(id);
  }
  if (!unpaired.empty()) {
    for (const auto& id : unpaired) std::cerr << "srrg: unpaired study id " << id << "\n";
    return kFailure;
  }
  json pairs = json::array();
  std::vector<DiffStats> stats;
  std::string listing;
  for (const auto& [id, t] : a) {
    const auto s = diff_stats(t, b.at(id));
    stats.push_back(s);
    json row = diff_stats_to_json(s);
    row["study_id"] = id;
    pairs.push_back(row);
    listing += "Study " + id + "\n" + format_diff_stats(s);
  }
  const auto summary = summarize_stats(stats);
  if (text) {
    std::cout << listing << "\n" << format_review_summary(summary);
  } else {
    std::cout << json{{"pairs", pairs}, {"summary", review_summary_to_json(summary)}}.dump(2) << "\n";
  }
  return kOk;
}

int cmd_stats(Context& ctx, const std::string& reviews_path, bool text) {
  if (reviews_path.empty()) {
    const json j = summary_json(ctx.store());
    if (text) {
      std::vector<DiffStats> stats;
      for (const auto& r : ctx.store().reviews()) stats.push_back(study_diff(ctx.store(), r.study_id));
      std::cout << format_review_summary(summarize_stats(stats));
    } else {
      std::cout << j.dump() << "\n";
    }
    return kOk;
  }
  // Review rows: {"study_id", "original_text" | "structured_text", "edited_text"}.
  std::vector<std::pair<std::string, std::string>> records;
  std::set<std::string> seen;
  size_t line_no = 0;
  const std::string content = read_file(reviews_path);
  for (auto line : split_lines(content)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto row = json::parse(line);
      const std::string id = row.value("study_id", "");
      if (!id.empty() && !seen.insert(id).second) {
        throw Error(ErrorCode::kSchemaViolation, "duplicate study id " + id);
      }
      const std::string base = row.contains("structured_text") && row["structured_text"].is_string()
                                   ? row["structured_text"].get<std::string>()
                                   : row.at("original_text").get<std::string>();
      records.emplace_back(base, row.at("edited_text").get<std::string>());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, reviews_path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  const auto summary = review_summary(records);
  if (text) {
    std::cout << format_review_summary(summary);
  } else {
    std::cout << json{{"review_summary", review_summary_to_json(summary)}}.dump(2) << "\n";
  }
  return kOk;
}

// ---- corpus management ------------------------------------------------------

int cmd_import(Context& ctx, const std::string& file, std::string format) {
  if (format.empty()) format = fs::path(file).extension() == ".csv" ? "csv" : "jsonl";
  if (format != "csv" && format != "jsonl") throw Error(ErrorCode::kSchemaViolation, "unknown format: " + format);
  const auto result =
      ctx.store().import_studies(file, format == "csv" ? ImportFormat::kCsv : ImportFormat::kJsonl);
  json errors = json::array();
  for (const auto& e : result.errors) errors.push_back({{"line", e.line}, {"message", e.message}});
  std::cout << json{{"imported", result.imported}, {"errors", errors}}.dump(2) << "\n";
  return result.errors.empty() ? kOk : kFindings;
}

std::map<std::string, Split> load_manifest(const std::string& path) {
  std::map<std::string, Split> out;
  auto add = [&](const std::string& id, const std::string& name) {
    auto split = split_from_name(name);
    if (!split) throw Error(ErrorCode::kSchemaViolation, "unknown split '" + name + "' for " + id);
    out[id] = *split;
  };
  if (fs::path(path).extension() == ".csv") {
    const auto records = parse_csv(read_file(path));
    for (size_t i = 1; i < records.size(); ++i) {
      if (records[i].fields.size() != 2) {
        throw Error(ErrorCode::kSchemaViolation, path + ":" + std::to_string(records[i].line) + ": expected study_id,split");
      }
      add(records[i].fields[0], records[i].fields[1]);
    }
    return out;
  }
  for (const auto& [id, name] : parse_json_file(path).items()) add(id, name.get<std::string>());
  return out;
}

int cmd_splits(Context& ctx, const std::string& manifest) {
  auto& store = ctx.store();
  if (!manifest.empty()) store.assign_splits(load_manifest(manifest));
  std::map<std::string, size_t> counts;
  for (const auto& s : store.studies()) counts[s.split ? std::string(split_name(*s.split)) : "unassigned"]++;
  std::cout << json(counts).dump(2) << "\n";
  return kOk;
}

// ---- structure / chexbert -----------------------------------------------------

int cmd_structure(Context& ctx, const std::vector<std::string>& files, const std::string& llm_spec) {
  LlmClient& client = ctx.client(llm_spec);
  json out = json::array();
  int code = kOk;
  for (const auto& file : files) {
    const auto result = restructure(read_file(file), client);
    json issues = json::array();
    for (const auto& i : result.parse.issues) issues.push_back(issue_to_json(i));
    json violations = json::array();
    for (const auto& v : result.violations) violations.push_back(violation_to_json(v));
    json row = {{"file", file}, {"ok", result.ok()}, {"attempts", result.attempts},
                {"issues", issues}, {"violations", violations}};
    if (result.parse.report) row["structured_text"] = render_report(*result.parse.report);
    if (!result.ok()) code = kFindings;
    out.push_back(std::move(row));
  }
  std::cout << out.dump(2) << "\n";
  return code;
}

int cmd_chexbert(Context& ctx, const std::string& predictions) {
  std::string out;
  size_t line_no = 0;
  const std::string content = read_file(predictions);
  for (auto line : split_lines(content)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json row;
    try {
      row = json::parse(line);
      const auto labels = normalize_labels(labels_from_json(row.at("labels")), ctx.taxonomy());
      const auto proj = map_to_chexbert(labels, ctx.mapping());
      row["chexbert"] = proj.classes;
      row["unmapped"] = proj.unmapped;
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kSchemaViolation, predictions + ":" + std::to_string(line_no) + ": " + e.what());
    }
    out += row.dump() + "\n";
  }
  std::cout << out;
  return kOk;
}

// ---- serve --------------------------------------------------------------------

int cmd_serve(Context& ctx, const std::string& addr, const std::string& tokens, int lease_minutes,
              const std::string& task_split) {
  ServiceConfig config;
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::kSchemaViolation, "--addr must be host:port");
  config.host = addr.substr(0, colon);
  try {
    config.port = std::stoi(addr.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kSchemaViolation, "invalid port in --addr " + addr);
  }
  config.token_file = tokens;
  config.lease = std::chrono::minutes(lease_minutes);
  if (task_split == "any") {
    config.task_split.reset();
  } else {
    config.task_split = split_from_name(task_split);
    if (!config.task_split) throw Error(ErrorCode::kSchemaViolation, "unknown split " + task_split);
  }

  // Handle SIGINT/SIGTERM on a dedicated thread so shutdown runs outside a
  // signal handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  CorpusStore& store = ctx.store();
  ReviewService service(store, ctx.taxonomy(), ctx.taxonomy_text(), config);
  int port = 0;
  try {
    port = service.bind();
  } catch (const Error& e) {
    std::cerr << "srrg: " << e.what() << "\n";
    return kFailure;
  }
  std::cerr << "listening on " << config.host << ":" << port << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    std::cerr << "srrg: shutting down\n";
    service.stop();
  });
  service.run();
  // If run() returned for another reason, release the waiter.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured radiology report toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "srrg.toml", "TOML config file; flags override it");
  app.set_version_flag("--version", "srrg 0.1.0");

  Options opts;
  app.add_option("--corpus", opts.corpus, "Corpus directory");
  app.add_option("--taxonomy", opts.taxonomy, "Disease tree JSON (default: bundled)");
  app.add_option("--mapping", opts.mapping, "CheXbert mapping JSON (default: bundled)");
  app.add_option("--labeler", opts.labeler,
                 "keyword[:lexicon.json] | predictions:<file> | replay:<recording> | llm:<config.json>");
  app.add_option("--record", opts.record, "Append LLM exchanges to this recording");
  app.add_option("--workers", opts.workers, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> files;
  bool lenient = false;
  std::string lexicon;
  auto* parse = app.add_subcommand("parse", "Parse report files and print issues");
  parse->add_option("files", files, "Report files")->required();
  parse->add_flag("--lenient", lenient, "Best-effort parse");

  auto* validate = app.add_subcommand("validate", "Parse strictly and check content rules");
  validate->add_option("files", files, "Report files")->required();
  validate->add_option("--identifier-lexicon", lexicon, "JSON array of names/institutions to flag");

  std::string in_path, out_path;
  int consensus = 1;
  bool write_back = false;
  auto* label = app.add_subcommand("label", "Label every utterance of structured studies");
  label->add_option("--in", in_path, "Study JSONL/CSV (default: the corpus)");
  label->add_option("--out", out_path, "Prediction JSONL output (default: stdout)");
  label->add_option("--consensus", consensus, "Voters per utterance (1 or 3)");
  label->add_flag("--write-back", write_back, "Store labels in the corpus");

  std::string pred_path, ref_path, gen_labeler, alignment = "unaligned", split = "test", csv_path,
                                                external;
  std::vector<std::string> spaces;
  bool allow_partial = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score generated reports against references");
  evaluate->add_option("--pred-reports", pred_path, "Generated reports (dir of .txt or JSONL)")->required();
  evaluate->add_option("--ref-reports", ref_path, "Reference reports (dir of .txt or JSONL)")->required();
  evaluate->add_option("--gen-labeler", gen_labeler, "Labeler for generated reports (default: --labeler)");
  evaluate->add_option("--space", spaces, "leaves | upper | leaves_with_status | upper_with_status | all");
  evaluate->add_option("--alignment", alignment, "aligned | unaligned | both");
  evaluate->add_option("--split", split, "Split name recorded in the output");
  evaluate->add_option("--csv", csv_path, "Also write CSV here");
  evaluate->add_option("--json", out_path, "JSON output (default: stdout)");
  evaluate->add_option("--external", external, "JSON object of externally computed scores");
  evaluate->add_flag("--allow-partial", allow_partial, "Score only ids present on both sides");

  std::string orig, edited, study;
  bool text = false;
  auto* diff = app.add_subcommand("diff", "Word-level diff statistics");
  diff->add_option("--orig", orig, "Original text file or JSONL");
  diff->add_option("--edited", edited, "Edited text file or JSONL");
  diff->add_option("--study", study, "Diff a reviewed study of the corpus");
  diff->add_flag("--text", text, "Plain listing instead of JSON");

  std::string reviews_path;
  auto* stats = app.add_subcommand("stats", "Reader-study summary statistics");
  stats->add_option("--reviews", reviews_path, "Review JSONL (default: the corpus)");
  stats->add_flag("--text", text, "Plain listing instead of JSON");

  std::string addr = "127.0.0.1:8080", tokens, task_split = "test_reviewed";
  int lease_minutes = 30;
  auto* serve = app.add_subcommand("serve", "Run the review service");
  serve->add_option("--addr", addr, "host:port (port 0 picks a free port)");
  serve->add_option("--tokens", tokens, "Bearer token file");
  serve->add_option("--lease-minutes", lease_minutes, "Task lease duration")->check(CLI::PositiveNumber);
  serve->add_option("--task-split", task_split, "Split to dispense, or 'any'");

  std::string import_file, format;
  auto* import = app.add_subcommand("import", "Upsert studies into the corpus");
  import->add_option("file", import_file, "JSONL or CSV file")->required();
  import->add_option("--format", format, "jsonl | csv (default: from extension)");

  std::string manifest;
  auto* splits = app.add_subcommand("splits", "Assign splits and print split counts");
  splits->add_option("--manifest", manifest, "JSON {study_id: split} or CSV study_id,split");

  auto* export_cmd = app.add_subcommand("export", "Print studies as JSONL sorted by id");
  export_cmd->add_option("--out", out_path, "Output file (default: stdout)");

  app.add_subcommand("compact", "Rewrite corpus logs and the index");

  std::string llm_spec;
  auto* structure = app.add_subcommand("structure", "Restructure free-text reports with an LLM");
  structure->add_option("files", files, "Free-text report files")->required();
  structure->add_option("--llm", llm_spec, "replay:<recording> | llm:<config.json>")->required();

  std::string predictions;
  auto* chexbert = app.add_subcommand("chexbert", "Project prediction rows onto CheXbert classes");
  chexbert->add_option("predictions", predictions, "Prediction JSONL")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kFailure;
  }

  Context ctx(opts);
  try {
    if (*parse) return cmd_parse(files, lenient, false, "");
    if (*validate) return cmd_parse(files, false, true, lexicon);
    if (*label) return cmd_label(ctx, opts, in_path, out_path, consensus, write_back);
    if (*evaluate) {
      return cmd_evaluate(ctx, opts, pred_path, ref_path, gen_labeler, spaces, alignment, split,
                          csv_path, out_path, external, allow_partial);
    }
    if (*diff) return cmd_diff(ctx, orig, edited, study, text);
    if (*stats) return cmd_stats(ctx, reviews_path, text);
    if (*serve) return cmd_serve(ctx, addr, tokens, lease_minutes, task_split);
    if (*import) return cmd_import(ctx, import_file, format);
    if (*splits) return cmd_splits(ctx, manifest);
    if (*export_cmd) {
      write_output(out_path, ctx.store().export_studies());
      return kOk;
    }
    if (app.got_subcommand("compact")) {
      ctx.store().compact();
      return kOk;
    }
    if (*structure) return cmd_structure(ctx, files, llm_spec);
    if (*chexbert) return cmd_chexbert(ctx, predictions);
  } catch (const Error& e) {
    std::cerr << "srrg: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "srrg: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
