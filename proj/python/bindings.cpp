#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "srrg/error.hpp"
#include "srrg/labeling.hpp"
#include "srrg/metrics.hpp"
#include "srrg/report.hpp"
#include "srrg/taxonomy.hpp"
#include "srrg/textdiff.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace srrg;

namespace {

py::object to_py(const json& j) {
  switch (j.type()) {
    case json::value_t::null:
      return py::none();
    case json::value_t::boolean:
      return py::bool_(j.get<bool>());
    case json::value_t::number_integer:
      return py::int_(j.get<int64_t>());
    case json::value_t::number_unsigned:
      return py::int_(j.get<uint64_t>());
    case json::value_t::number_float:
      return py::float_(j.get<double>());
    case json::value_t::string:
      return py::str(j.get_ref<const std::string&>());
    case json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_py(v));
      return out;
    }
    case json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return out;
    }
    default:
      throw std::runtime_error("unsupported json value");
  }
}

// Round-trips through the json module; inputs are small.
json from_py(const py::handle& obj) {
  auto dumps = py::module_::import("json").attr("dumps");
  return json::parse(dumps(obj).cast<std::string>());
}

LabelSet labels_arg(const py::handle& obj) { return labels_from_json(from_py(obj)); }

std::vector<ClassSet> class_sets(const std::vector<std::vector<std::string>>& rows) {
  std::vector<ClassSet> out;
  for (const auto& r : rows) out.emplace_back(r.begin(), r.end());
  return out;
}

StructuredReport parse_or_throw(const std::string& text) {
  auto parsed = parse_report(text, ParseMode::kStrict);
  if (!parsed.ok()) {
    throw Error(ErrorCode::kParseFailed,
                parsed.issues.empty() ? "parse failed" : parsed.issues.front().message);
  }
  return *parsed.report;
}

LabelSpace space_arg(const std::string& name) {
  auto s = label_space_from_name(name);
  if (!s) throw Error(ErrorCode::kSchemaViolation, "unknown label space: " + name);
  return *s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Structured radiology report toolkit";

  static py::exception<Error> exc(m, "SrrgError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(exc.ptr(), (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "parse_report",
      [](const std::string& text, bool lenient) {
        auto parsed = parse_report(text, lenient ? ParseMode::kLenient : ParseMode::kStrict);
        json issues = json::array();
        for (const auto& i : parsed.issues) issues.push_back(issue_to_json(i));
        json out = {{"ok", parsed.ok()}, {"issues", issues}, {"report", nullptr}};
        if (parsed.report) out["report"] = report_to_json(*parsed.report);
        return to_py(out);
      },
      py::arg("text"), py::arg("lenient") = false);

  m.def(
      "render_report", [](const py::dict& report) { return render_report(report_from_json(from_py(report))); },
      py::arg("report"));

  m.def(
      "validate",
      [](const std::string& text, std::vector<std::string> lexicon) {
        DesiderataConfig config;
        config.identifier_lexicon = std::move(lexicon);
        json out = json::array();
        for (const auto& v : validate_desiderata(parse_or_throw(text), config)) {
          out.push_back(violation_to_json(v));
        }
        return to_py(out);
      },
      py::arg("text"), py::arg("identifier_lexicon") = std::vector<std::string>{});

  m.def(
      "utterances",
      [](const std::string& text, const std::string& study_id) {
        json out = json::array();
        for (const auto& u : extract_utterances(parse_or_throw(text), study_id)) {
          out.push_back({{"key", u.key()}, {"text", u.text}, {"origin", origin_to_json(u.origin)}});
        }
        return to_py(out);
      },
      py::arg("text"), py::arg("study_id") = "");

  m.def("taxonomy_leaves", [] { return Taxonomy::bundled().leaves(); });
  m.def("taxonomy_uppers", [] { return Taxonomy::bundled().uppers(); });
  m.def("upper_of", [](const std::string& leaf) { return Taxonomy::bundled().upper_of(leaf); });
  m.def(
      "class_universe",
      [](const std::string& space) { return Taxonomy::bundled().class_universe(space_arg(space)); },
      py::arg("space"));

  m.def("build_disease_prompt", [](const std::vector<std::string>& utterances) {
    return build_disease_prompt(utterances);
  });
  m.def("parse_disease_response", [](const std::string& text, const std::vector<std::string>& expected) {
    const auto r = parse_disease_response(text, expected);
    json labels = json::array();
    for (const auto& l : r.labels) labels.push_back(labels_to_json(l));
    return to_py({{"labels", labels}, {"warnings", r.warnings}});
  });
  m.def("consensus", [](const py::list& votes) {
    std::vector<LabelSet> sets;
    for (const auto& v : votes) sets.push_back(labels_arg(v));
    return to_py(labels_to_json(consensus(sets)));
  });
  m.def("keyword_label", [](const std::string& text) {
    static const KeywordLabeler labeler = KeywordLabeler::bundled();
    return to_py(labels_to_json(labeler.label_text(text)));
  });

  m.def(
      "multilabel_prf",
      [](const std::vector<std::vector<std::string>>& pred, const std::vector<std::vector<std::string>>& ref,
         const std::string& average, const std::vector<std::string>& universe) {
        auto mode = average_mode_from_name(average);
        if (!mode) throw Error(ErrorCode::kSchemaViolation, "unknown average: " + average);
        return to_py(prf_to_json(multilabel_prf(class_sets(pred), class_sets(ref), *mode, universe)));
      },
      py::arg("pred"), py::arg("ref"), py::arg("average") = "weighted",
      py::arg("universe") = std::vector<std::string>{});

  m.def(
      "f1_srr",
      [](const std::string& generated, const std::string& reference, const std::string& space,
         const std::string& alignment) {
        auto a = alignment_from_name(alignment);
        if (!a) throw Error(ErrorCode::kSchemaViolation, "unknown alignment: " + alignment);
        static const KeywordLabeler labeler = KeywordLabeler::bundled();
        const auto report =
            f1_srr(parse_or_throw(generated), parse_or_throw(reference), labeler, space_arg(space), *a);
        return to_py(score_report_to_json(report, ""));
      },
      py::arg("generated"), py::arg("reference"), py::arg("space") = "leaves",
      py::arg("alignment") = "unaligned");

  m.def("bleu", [](const std::string& c, const std::vector<std::string>& refs) { return bleu(c, refs); });
  m.def("rouge_l", [](const std::string& c, const std::string& r) { return rouge_l(c, r); });

  m.def("diff_stats", [](const std::string& original, const std::string& edited) {
    return to_py(diff_stats_to_json(diff_stats(original, edited)));
  });
  m.def("review_summary", [](const std::vector<std::pair<std::string, std::string>>& records) {
    return to_py(review_summary_to_json(review_summary(records)));
  });
  m.def("label_consistency", [](const py::list& pairs) {
    std::vector<std::pair<LabelSet, LabelSet>> in;
    for (const auto& p : pairs) {
      auto t = p.cast<py::tuple>();
      in.emplace_back(labels_arg(t[0]), labels_arg(t[1]));
    }
    return to_py(label_consistency_to_json(label_consistency(in)));
  });
}
