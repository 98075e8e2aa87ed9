"""Failure clustering, the selection gate, dedup, matching, and ranking."""

import random

import pytest

from helpers import make_candidate, make_outcome
from brtgen.errors import NotSelected
from brtgen.ranking import (
    FailureKey,
    cluster_fibs,
    dedup_syntactic,
    match_output_with_report,
    match_test_with_report,
    rank,
    select,
)
from brtgen.reports import BugReport


def _report(title="A bug", description="Something broke.", **kw):
    return BugReport(id="b", title=title, description=description, project_id="p", **kw)


def _fib(method_text, index, failure_type="java.lang.AssertionError", message="boom"):
    return (
        make_candidate(method_text, sample_index=index),
        make_outcome(failure_type, message, sample_index=index),
    )


def test_identical_outputs_form_one_cluster():
    fibs = [_fib(f"public void test{chr(65 + i)}() {{ go({i}); }}", i) for i in range(3)]
    clusters = cluster_fibs(fibs)
    assert len(clusters) == 1
    assert clusters[0].size == 3
    assert [m.sample_index for m in clusters[0].members] == [0, 1, 2]


def test_distinct_types_split_clusters():
    fibs = [
        _fib("public void testA() { a(); }", 0, "java.lang.AssertionError"),
        _fib("public void testB() { b(); }", 1, "java.lang.NullPointerException"),
    ]
    assert len(cluster_fibs(fibs)) == 2


def test_message_whitespace_is_normalized():
    fibs = [
        _fib("public void testA() { a(); }", 0, message="x   y\n z"),
        _fib("public void testB() { b(); }", 1, message="x y z"),
    ]
    assert len(cluster_fibs(fibs)) == 1


def test_timestamp_abstraction_flag():
    fibs = [
        _fib("public void testA() { a(); }", 0, message="failed at 2023-01-02 10:11:12 on node"),
        _fib("public void testB() { b(); }", 1, message="failed at 2023-04-05 20:21:22 on node"),
    ]
    assert len(cluster_fibs(fibs, abstract_messages=False)) == 2
    assert len(cluster_fibs(fibs, abstract_messages=True)) == 1


def test_address_abstraction():
    fibs = [
        _fib("public void testA() { a(); }", 0, message="object Widget@1a2b3c differs"),
        _fib("public void testB() { b(); }", 1, message="object Widget@99ff00 differs"),
    ]
    assert len(cluster_fibs(fibs, abstract_messages=True)) == 1


def test_selection_gate_boundaries():
    one_one = cluster_fibs([
        _fib("public void testA() { a(); }", 0, "T1"),
        _fib("public void testB() { b(); }", 1, "T2"),
    ])
    decision = select(one_one, 1)
    assert decision.max_cluster_size == 1
    assert not decision.selected  # max == thr suppresses

    three_one = cluster_fibs([
        _fib("public void testA() { a(); }", 0, "T1"),
        _fib("public void testB() { b(); }", 1, "T1"),
        _fib("public void testC() { c(); }", 2, "T1"),
        _fib("public void testD() { d(); }", 3, "T2"),
    ])
    decision = select(three_one, 1)
    assert decision.selected and decision.max_cluster_size == 3

    assert not select([], 0).selected


def test_dedup_name_normalization():
    body = "public void testOne() {\n    check(42);\n}"
    renamed = "public void testTwo() {\n    check(42);\n}"
    reformatted = "public void testThree()   {\n        check( 42 )   ;\n}"
    different = "public void testFour() {\n    check(43);\n}"
    survivors = dedup_syntactic([
        make_candidate(body, 0),
        make_candidate(renamed, 1),
        make_candidate(reformatted, 2),
        make_candidate(different, 3),
    ])
    assert [c.sample_index for c in survivors] == [0, 3]


def test_dedup_keeps_lowest_sample_index_regardless_of_order():
    body = "public void testX() { check(); }"
    survivors = dedup_syntactic([
        make_candidate(body.replace("testX", "testLate"), 5),
        make_candidate(body, 1),
    ])
    assert [c.sample_index for c in survivors] == [1]


def test_match_output_with_report():
    report = _report(
        title="Crash while parsing numbers",
        description="The parser dies with a NumberFormatException on '1e+'.",
    )
    key = FailureKey("java.lang.NumberFormatException", "for input string")
    assert match_output_with_report(key, report)

    absent = FailureKey("java.lang.IllegalStateException", "")
    assert not match_output_with_report(absent, report)

    verbatim = FailureKey("java.lang.AssertionError", "expected:<false> but was:<true>")
    mentioned = _report(description="the assert prints expected:<false> but was:<true> now")
    assert match_output_with_report(verbatim, mentioned)


def test_match_output_is_case_insensitive():
    report = _report(description="we saw a numberformatexception yesterday")
    key = FailureKey("java.lang.NumberFormatException", "")
    assert match_output_with_report(key, report)


def test_match_test_with_report():
    report = _report(
        title="assertContainsIgnoringCase fails to compare i and I in tr_TR locale",
        description="See Strings#assertContainsIgnoringCase.",
    )
    test = make_candidate(
        'public void testIssue952() {\n'
        '    Locale locale = new Locale("tr", "TR");\n'
        '    Locale.setDefault(locale);\n'
        '    assertThat(locale.toString()).isEqualTo("tr_TR");\n'
        '}'
    )
    assert match_test_with_report(test, report)

    plain = make_candidate("public void testX() { run(); }")
    assert not match_test_with_report(plain, report)

    short_literal = make_candidate('public void testY() { check("tr"); }')
    assert not match_test_with_report(short_literal, _report(description="tr locale"))


def test_match_test_via_exception_name():
    report = _report(description="throws a SocketTimeoutException under load")
    test = make_candidate(
        "public void testZ() { try { go(); } catch (SocketTimeoutException e) { } }"
    )
    assert match_test_with_report(test, report)


def _ranked_indices(clusters, report, thr=0):
    decision = select(clusters, thr)
    return [e.candidate.sample_index for e in rank(clusters, report, decision).ordered]


def test_rank_prefers_report_matching_cluster():
    # cluster A: size 3 (one duplicate), no report match; cluster B: size 2
    # (one duplicate), output matches the report
    report = _report(description="it ends with an IllegalArgumentException somewhere")
    a1 = "public void testA1() { alpha(); beta(); }"
    a2 = "public void testA2() { alpha(); beta(); gamma(); }"
    a1_dup = "public void testA1Copy() { alpha(); beta(); }"
    b1 = "public void testB1() { delta(); }"
    b1_dup = "public void testB1Copy()  {  delta( ) ; }"
    fibs = [
        _fib(a1, 0, "java.lang.AssertionError", "left differs"),
        _fib(a2, 1, "java.lang.AssertionError", "left differs"),
        _fib(a1_dup, 2, "java.lang.AssertionError", "left differs"),
        _fib(b1, 3, "java.lang.IllegalArgumentException", "bounds crossed"),
        _fib(b1_dup, 4, "java.lang.IllegalArgumentException", "bounds crossed"),
    ]
    clusters = cluster_fibs(fibs)
    assert sorted(c.size for c in clusters) == [2, 3]
    assert _ranked_indices(clusters, report, thr=1) == [3, 0, 1]


def test_rank_single_cluster_single_test():
    clusters = cluster_fibs([_fib("public void testOnly() { x(); }", 0)])
    assert _ranked_indices(clusters, _report()) == [0]


def test_rank_alternates_between_equal_clusters():
    # two clusters of two, no matches, identical token counts: strict
    # alternation, cluster order decided by earliest member
    t = "public void test%s() { go%d(); }"
    fibs = [
        _fib(t % ("A", 1), 0, "T1"),
        _fib(t % ("B", 2), 1, "T2"),
        _fib(t % ("C", 3), 2, "T1"),
        _fib(t % ("D", 4), 3, "T2"),
    ]
    clusters = cluster_fibs(fibs)
    assert _ranked_indices(clusters, _report()) == [0, 1, 2, 3]


def test_rank_requires_selection():
    clusters = cluster_fibs([_fib("public void testA() { a(); }", 0)])
    decision = select(clusters, 5)
    with pytest.raises(NotSelected):
        rank(clusters, _report(), decision)


def test_rank_skips_clusters_emptied_by_dedup():
    shared = "public void testSame() { same(); }"
    fibs = [
        _fib(shared, 0, "T1"),
        _fib(shared.replace("testSame", "testSameCopy"), 1, "T2"),
        _fib("public void testOther() { other(); }", 2, "T1"),
    ]
    clusters = cluster_fibs(fibs)
    # sample 1 is a syntactic duplicate of sample 0 in another cluster:
    # T2 loses its only member but its size still counted for the gate
    indices = _ranked_indices(clusters, _report())
    assert indices == [0, 2]


def test_rank_entry_diagnostics():
    report = _report(description='fails with "gear jam" message')
    fibs = [
        _fib('public void testJam() { engage("gear jam"); }', 0, "T1", "gear jam"),
        _fib("public void testFree() { spin(); }", 1, "T2", "smooth"),
    ]
    clusters = cluster_fibs(fibs)
    suggestions = rank(clusters, report, select(clusters, 0))
    first = suggestions.ordered[0]
    assert first.candidate.sample_index == 0
    assert first.br_output_match  # "gear jam" occurs in the report
    assert first.br_test_match
    assert first.rank == 1
    assert [e.rank for e in suggestions.ordered] == [1, 2]


def _random_instance(rng: random.Random):
    bodies = [
        "public void test%s() { alpha(); }",
        "public void test%s() { alpha(); beta(); }",
        "public void test%s() { gamma(\"lit-%d\"); }",
        "public void test%s() { delta(); epsilon(); zeta(); }",
    ]
    keys = [("T1", "m1"), ("T1", "m2"), ("T2", "m1"), ("T2", "")]
    fibs = []
    for index in range(rng.randint(1, 10)):
        template = rng.choice(bodies)
        body = template % ((chr(65 + index),) if "%d" not in template else (chr(65 + index), rng.randint(1, 3)))
        failure_type, message = rng.choice(keys)
        fibs.append(_fib(body, index, failure_type, message))
    return fibs


def test_gate_monotone_in_threshold():
    rng = random.Random(99)
    for _ in range(100):
        clusters = cluster_fibs(_random_instance(rng))
        selected = [select(clusters, thr).selected for thr in range(0, 11)]
        for earlier, later in zip(selected, selected[1:]):
            assert earlier or not later  # once suppressed, stays suppressed


def test_interleave_prefix_covers_distinct_clusters():
    rng = random.Random(4)
    for _ in range(100):
        clusters = cluster_fibs(_random_instance(rng))
        decision = select(clusters, 0)
        if not decision.selected:
            continue
        suggestions = rank(clusters, _report(), decision)
        nonempty = len({e.cluster_key for e in suggestions.ordered})
        prefix = suggestions.ordered[:nonempty]
        assert len({e.cluster_key for e in prefix}) == nonempty


def test_permutation_invariance():
    rng = random.Random(12)
    for _ in range(50):
        fibs = _random_instance(rng)
        clusters = cluster_fibs(fibs)
        decision = select(clusters, 0)
        baseline = [e.candidate.sample_index for e in rank(clusters, _report(), decision).ordered]
        shuffled = list(fibs)
        rng.shuffle(shuffled)
        clusters2 = cluster_fibs(shuffled)
        again = [e.candidate.sample_index for e in rank(clusters2, _report(), select(clusters2, 0)).ordered]
        assert again == baseline
