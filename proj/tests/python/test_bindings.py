import pytest

import srrg


def test_parse_render_round_trip(report_text):
    parsed = srrg.parse_report(report_text)
    assert parsed["ok"] and parsed["issues"] == []
    rendered = srrg.render_report(parsed["report"])
    assert srrg.parse_report(rendered)["report"] == parsed["report"]


def test_lenient_parse_reports_issues():
    parsed = srrg.parse_report("Findings:\nLungs and Airways:\nclear lungs\n", lenient=True)
    assert not parsed["ok"]
    assert parsed["issues"]


def test_strict_errors_raise():
    with pytest.raises(srrg.SrrgError):
        srrg.validate("not a report at all")


def test_taxonomy_shape():
    leaves = srrg.taxonomy_leaves()
    assert len(leaves) == 54
    assert srrg.upper_of("Pneumonia") == "Consolidation"
    assert len(srrg.class_universe("leaves_with_status")) == 160


def test_utterances_have_stable_keys(report_text):
    utts = srrg.utterances(report_text, "s1")
    assert [u["key"] for u in utts] == [u["key"] for u in srrg.utterances(report_text, "s1")]
    assert len(utts) == 4


def test_prompt_and_worked_response():
    finding = "Right perihilar consolidation, likely atypical edema, with pneumonia as a differential diagnosis."
    assert finding in srrg.build_disease_prompt([finding])
    response = finding + " => 1. Perihilar airspace opacity (Present) 2. Edema (Uncertain) 3. Pneumonia (Uncertain)"
    labels = srrg.parse_disease_response(response, [finding])["labels"]
    assert len(labels) == 1 and len(labels[0]) == 3


def test_keyword_label_is_deterministic():
    text = "Right lower lobe consolidation."
    assert srrg.keyword_label(text) == srrg.keyword_label(text)


def test_multilabel_prf_matches_hand_count():
    # tp=1, fp=1, fn=1 pooled
    prf = srrg.multilabel_prf([["a", "b"]], [["a", "c"]], "micro")
    assert prf["precision"] == pytest.approx(0.5)
    assert prf["recall"] == pytest.approx(0.5)


def test_f1_srr_identity(report_text):
    for space in ("leaves", "upper", "leaves_with_status", "upper_with_status"):
        out = srrg.f1_srr(report_text, report_text, space, "aligned")
        assert {row["mode"] for row in out} == {"micro", "macro", "weighted", "samples"}
        assert all(row["f1"] == pytest.approx(1.0) for row in out)


def test_text_metrics():
    s = "no acute cardiopulmonary process"
    assert srrg.bleu(s, [s]) == pytest.approx(100.0)
    assert srrg.rouge_l(s, s) == pytest.approx(100.0)


def test_diff_identical_pair():
    stats = srrg.diff_stats("Lungs are clear.", "Lungs are clear.")
    assert stats["similarity_ratio"] == 1.0
    assert stats["insertions"] == stats["deletions"] == stats["replacements"] == 0


def test_review_summary():
    summary = srrg.review_summary([("a b", "a b"), ("a b", "a c")])
    assert summary["total_studies"] == 2 and summary["studies_changed"] == 1
    assert summary["percent_changed"] == pytest.approx(50.0)
