import io
from collections import Counter

import pytest

from crashscrub.audit import CorpusStats, aggregate
from crashscrub.detect import DEFAULT_DETECTORS, run_all
from crashscrub.gencorpus import (
    CorpusSpec,
    GenerationConfigError,
    generate,
    iter_generate,
    read_truth_jsonl,
    write_corpus_jsonl,
    write_truth_jsonl,
)
from crashscrub.model import FindingCategory
from crashscrub.sanitize import SanitizerConfig, readability_check, sanitize_report

ALL_PLANTABLE = [
    FindingCategory.SQL_INJECTION,
    FindingCategory.DIRECTORY_TRAVERSAL,
    FindingCategory.LOCAL_FILE_INCLUSION,
    FindingCategory.CROSS_SITE_SCRIPTING,
    FindingCategory.PHISHING,
    FindingCategory.IP_ADDRESS,
    FindingCategory.EMAIL_ADDRESS,
    FindingCategory.LOCATION,
    FindingCategory.CREDENTIAL,
    FindingCategory.SESSION_ID,
    FindingCategory.TOKEN_ID,
    FindingCategory.PHONE_NUMBER,
    FindingCategory.CONTACT_REQUEST,
]


def corpus_bytes(spec):
    out = io.StringIO()
    write_corpus_jsonl((r for r, _ in iter_generate(spec)), out)
    return out.getvalue()


def test_benign_only():
    corpus, truth = generate(CorpusSpec(seed=1, benign_count=10))
    assert len(corpus) == 10
    assert truth.labels == []


def test_deterministic_across_runs():
    spec = CorpusSpec(seed=42, benign_count=25, planted={FindingCategory.SESSION_ID: 10})
    assert corpus_bytes(spec) == corpus_bytes(spec)
    c1, t1 = generate(spec)
    c2, t2 = generate(spec)
    assert c1 == c2
    assert t1.labels == t2.labels


def test_different_seeds_differ():
    a = corpus_bytes(CorpusSpec(seed=1, benign_count=10))
    b = corpus_bytes(CorpusSpec(seed=2, benign_count=10))
    assert a != b


def test_planted_counts_are_exact():
    planted = {c: 4 for c in ALL_PLANTABLE}
    corpus, truth = generate(CorpusSpec(seed=5, benign_count=7, planted=planted))
    assert len(corpus) == 7 + 4 * len(ALL_PLANTABLE)
    by_category = Counter(label.category for label in truth.labels)
    assert by_category == Counter(planted)


def test_unsupported_category_rejected():
    with pytest.raises(GenerationConfigError):
        generate(CorpusSpec(seed=1, planted={FindingCategory.PLATFORM_STAT: 1}))


def test_spec_validation():
    with pytest.raises(ValueError):
        CorpusSpec(path_embedded_fraction=1.5)
    with pytest.raises(ValueError):
        CorpusSpec(benign_count=-1)
    with pytest.raises(ValueError):
        CorpusSpec(planted={FindingCategory.SESSION_ID: -2})
    spec = CorpusSpec(planted={"session_id": 3})
    assert spec.planted == {FindingCategory.SESSION_ID: 3}


def test_labels_satisfy_span_invariants():
    corpus, truth = generate(
        CorpusSpec(seed=9, benign_count=3, planted={c: 3 for c in ALL_PLANTABLE})
    )
    by_id = {r.id: r for r in corpus}
    for label in truth.labels:
        source = getattr(by_id[label.record_id], label.field.value)
        assert 0 <= label.start < label.end <= len(source)


def test_path_embedded_count_exact():
    spec = CorpusSpec(seed=42, planted={FindingCategory.SESSION_ID: 500}, path_embedded_fraction=0.08)
    corpus, _ = generate(spec)
    embedded = [r for r in corpus if ";jsessionid=" in r.url]
    assert len(embedded) == 40


def test_recall_and_precision_closure():
    planted = {c: 3 for c in ALL_PLANTABLE}
    for seed in range(5):
        corpus, truth = generate(CorpusSpec(seed=seed, benign_count=10, planted=planted))
        by_record = truth.by_record()
        for report in corpus:
            wanted = Counter((l.category, l.field) for l in by_record.get(report.id, []))
            got = Counter((f.category, f.field) for f in run_all(report, DEFAULT_DETECTORS))
            assert got == wanted, report


def test_benign_corpus_triggers_nothing():
    corpus, _ = generate(CorpusSpec(seed=33, benign_count=200))
    for report in corpus:
        assert run_all(report, DEFAULT_DETECTORS) == []


def test_audit_counts_equal_planted():
    planted = {c: 6 for c in ALL_PLANTABLE}
    corpus, _ = generate(CorpusSpec(seed=21, benign_count=30, planted=planted))
    stats = CorpusStats()
    for report in corpus:
        aggregate(stats, report, run_all(report, DEFAULT_DETECTORS))
    assert dict(stats.findings_by_category) == planted


def test_masking_covers_planted_secrets():
    cfg = SanitizerConfig()
    spec = CorpusSpec(
        seed=13, planted={FindingCategory.SESSION_ID: 50, FindingCategory.CREDENTIAL: 50}
    )
    corpus, truth = generate(spec)
    scrubbed = {r.id: sanitize_report(r, cfg).report for r in corpus}
    for label in truth.labels:
        text = getattr(scrubbed[label.record_id], label.field.value)
        width = min(4, label.end - label.start)
        assert set(text[label.start : label.start + width]) == {"*"}


def test_path_embedded_defeats_readability_query_form_keeps_it():
    cfg = SanitizerConfig()
    spec = CorpusSpec(seed=42, planted={FindingCategory.SESSION_ID: 100}, path_embedded_fraction=0.2)
    corpus, _ = generate(spec)
    for report in corpus:
        masked = sanitize_report(report, cfg).report.url
        readable = readability_check(report.url, masked)
        assert readable == (";jsessionid=" not in report.url)


def test_truth_jsonl_round_trip():
    corpus, truth = generate(CorpusSpec(seed=3, planted={FindingCategory.CREDENTIAL: 5}))
    buffer = io.StringIO()
    write_truth_jsonl(truth.labels, buffer)
    buffer.seek(0)
    back = read_truth_jsonl(buffer)
    assert back.labels == truth.labels


def test_iter_generate_streaming_matches_generate():
    spec = CorpusSpec(seed=8, benign_count=5, planted={FindingCategory.TOKEN_ID: 5})
    lazy = list(iter_generate(spec))
    corpus, truth = generate(spec)
    assert [r for r, _ in lazy] == corpus
    assert [l for _, labels in lazy for l in labels] == truth.labels
