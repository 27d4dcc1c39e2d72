import itertools
import math
import random
import re
import time
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from fpdiff.analysis.clones import CloneClass, detect_clones, type1_key, type2_key, type2c_key
from fpdiff.analysis.similarity import (Weights, mean_pairwise_similarity, similarity_score)
from fpdiff.analysis.tables import (ABSENT, TOTAL, DigitStats, DomainError, baseline_table,
                                    compiler_pair_table, inconsistency_rate, kind_distribution,
                                    nominal_comparisons, percent, summarize)
from fpdiff.diffexec.compare import BASELINE
from fpdiff.diffexec.fpbits import Category
from fpdiff.program.generator import generate_random_program
from fpdiff.program.lexer import tokenize_c
from support import record

R, Z, PI, NI, NAN = (Category.REAL, Category.ZERO, Category.POS_INF, Category.NEG_INF,
                     Category.NAN)
LEVELS = ("O0_nofma", "O0", "O1", "O2", "O3", "O3_fastmath")


# -- rates

def test_rate_examples():
    assert percent(inconsistency_rate(4781, 3, 6, 1000)) == "26.56%"
    assert percent(inconsistency_rate(2147, 3, 6, 1000)) == "11.93%"
    assert inconsistency_rate(0, 2, 1, 1) == 0.0
    assert inconsistency_rate(6, 2, 6, 1) == 1.0
    assert nominal_comparisons(2, 6, 50) == 300


@pytest.mark.parametrize("args", [(1, 1, 6, 10), (1, 2, 0, 10), (1, 2, 6, 0), (-1, 2, 6, 10),
                                  (61, 2, 6, 10)])
def test_rate_domain(args):
    with pytest.raises(DomainError):
        inconsistency_rate(*args)


@given(st.integers(2, 6), st.integers(1, 6), st.integers(1, 500), st.data())
def test_rate_bounds(c, o, n, data):
    k = data.draw(st.integers(0, math.comb(c, 2) * o * n))
    r = inconsistency_rate(k, c, o, n)
    assert 0.0 <= r <= 1.0
    assert r * nominal_comparisons(c, o, n) == pytest.approx(k)


def test_digit_stats():
    assert DigitStats.of([]) is None
    s = DigitStats.of([1, 16, 13])
    assert (s.min, s.max, s.mean) == (1, 16, 10.0)
    assert str(s) == "1 / 16 / 10.00"


# -- kind distribution

def test_kind_distribution_single_row():
    recs = [record(level="O3_fastmath", kinds=(R, R))]
    t = kind_distribution(recs, LEVELS)
    assert t.rows == ["{REAL, REAL}", TOTAL]
    assert t.count("{REAL, REAL}", "O3_fastmath") == 1
    assert t.get("{REAL, REAL}", "O2") is None
    assert "--" in t.render_text()


def test_kind_distribution_canonical_order():
    recs = [record(kinds=(Z, R)), record(kinds=(R, Z)), record(kinds=(NAN, PI)),
            record(kinds=(R, R), inconsistent=False)]
    t = kind_distribution(recs, LEVELS)
    assert t.rows == ["{REAL, ZERO}", "{POS_INF, NAN}", TOTAL]
    assert t.count("{REAL, ZERO}", "O3") == 2
    assert t.count(TOTAL, TOTAL) == 3


def test_kind_distribution_ignores_baseline():
    recs = [record(mode=BASELINE), record()]
    assert kind_distribution(recs, LEVELS).count(TOTAL, TOTAL) == 1


kinds = st.sampled_from(list(Category))


@settings(max_examples=100)
@given(st.lists(st.tuples(st.sampled_from(LEVELS), kinds, kinds, st.booleans()), max_size=60))
def test_kind_totals_invariant(specs):
    recs = [record(f"p{i}", lv, kinds=(a, b), inconsistent=inc)
            for i, (lv, a, b, inc) in enumerate(specs)]
    t = kind_distribution(recs, LEVELS)
    rows = t.rows[:-1]
    n_incons = sum(r.inconsistent for r in recs)
    assert t.count(TOTAL, TOTAL) == n_incons
    assert sum(t.count(r, TOTAL) for r in rows) == n_incons
    assert sum(t.count(TOTAL, c) for c in LEVELS) == n_incons
    for lv in LEVELS:
        assert sum(t.count(r, lv) for r in rows) == t.count(TOTAL, lv)


# -- compiler pairs

def test_pair_table_rate_and_digits():
    recs = [record(f"p{i}", "O3_fastmath", digit_diff=d) for i, d in enumerate((1, 16))]
    recs += [record(f"p{i}", "O3_fastmath", inconsistent=False) for i in range(2, 100)]
    t = compiler_pair_table(recs, 100, ["gcc", "clang"], LEVELS)
    cell = t.get("gcc vs clang", "O3_fastmath")
    assert percent(cell.rate) == "2.00%"
    assert (cell.digits.min, cell.digits.max) == (1, 16)
    assert t.get("gcc vs clang", "O1").count == 0 and t.get("gcc vs clang", "O1").digits is None


def test_pair_table_digit_mean():
    recs = [record(f"p{i}", "O2", digit_diff=d) for i, d in enumerate((1, 16, 13))]
    recs.append(record("p9", "O2", kinds=(R, PI)))
    cell = compiler_pair_table(recs, 10, ["gcc", "clang"], LEVELS).get("gcc vs clang", "O2")
    assert str(cell.digits) == "1 / 16 / 10.00"
    assert cell.nonfinite == 1 and cell.count == 4


def test_pair_table_three_compilers_total_is_sum():
    rng = random.Random(0)
    comps = ["a", "b", "c"]
    recs = []
    for i in range(40):
        for lv in LEVELS:
            for x, y in itertools.combinations(comps, 2):
                recs.append(record(f"p{i}", lv, x, y, inconsistent=rng.random() < 0.2))
    t = compiler_pair_table(recs, 40, comps, LEVELS)
    assert t.rows == ["a vs b", "a vs c", "b vs c"]
    for row in t.rows:
        total = t.get(row, TOTAL)
        assert total.rate == pytest.approx(sum(t.get(row, lv).rate for lv in LEVELS))
        assert total.count == sum(t.get(row, lv).count for lv in LEVELS)
    grand = sum(t.get(row, TOTAL).count for row in t.rows)
    assert grand == sum(r.inconsistent for r in recs)


def test_pair_table_rejects_zero_programs():
    with pytest.raises(DomainError):
        compiler_pair_table([], 0)


# -- baseline

def test_baseline_table():
    recs = [record("p0", "O3_fastmath", "gcc", mode=BASELINE),
            record("p1", "O3_fastmath", "gcc", mode=BASELINE),
            record("p0", "O2", "clang", mode=BASELINE),
            record("p1", "O2", "clang", mode=BASELINE, inconsistent=False)]
    t = baseline_table(recs, 10, ["gcc", "clang"], LEVELS)
    assert t.rows == ["O0", "O1", "O2", "O3", "O3_fastmath", TOTAL]
    assert t.columns == ["gcc", "clang"]
    assert percent(t.get("O3_fastmath", "gcc").rate) == "20.00%"
    assert percent(t.get("O2", "clang").rate) == "10.00%"
    assert t.get(TOTAL, "gcc").count == 2 and t.get(TOTAL, "clang").count == 1


def test_summary():
    recs = [record("p0", "O3"), record("p0", "O2", inconsistent=False), record("p1", "O1")]
    s = summarize(recs, 2, 10, 2, 6)
    assert s.nominal == 60 and s.comparisons == 3 and s.inconsistencies == 2
    assert s.rate == pytest.approx(2 / 60) and s.effective_rate == pytest.approx(2 / 3)
    assert s.successful_programs == 2
    assert "3.33%" in s.render_text()


def test_table_json_and_text_render():
    t = compiler_pair_table([record("p0", "O3", digit_diff=7)], 4, ["gcc", "clang"], LEVELS)
    js = t.to_json()
    assert js["denominator"] == 4 and js["columns"][-1] == TOTAL
    text = t.render_text()
    row = text.splitlines()[-1]
    assert "25.00% (7 / 7 / 7.00)" in row and ABSENT not in row.split()


# -- similarity

def ref_bleu(c, r, weight):
    """Independent BLEU-4 (uniform weights, brevity penalty, no smoothing)."""
    precisions = []
    for n in range(1, 5):
        cg = [tuple(c[i:i + n]) for i in range(len(c) - n + 1)]
        rg = Counter(tuple(r[i:i + n]) for i in range(len(r) - n + 1))
        if not cg:
            continue
        used = Counter()
        num = den = 0.0
        for g in cg:
            den += weight(g)
            if used[g] < rg[g]:
                used[g] += 1
                num += weight(g)
        if num == 0:
            return 0.0
        precisions.append(num / den)
    bp = 1.0 if len(c) > len(r) else math.exp(1 - len(r) / len(c))
    return bp * math.prod(precisions) ** (1 / len(precisions))


def test_similarity_reflexive_and_symmetric():
    rng = random.Random(3)
    progs = [generate_random_program(rng.getrandbits(32)).c_text for _ in range(20)]
    for a in progs:
        assert similarity_score(a, a) == pytest.approx(1.0)
    for a, b in itertools.combinations(progs[:10], 2):
        s = similarity_score(a, b)
        assert 0.0 <= s <= 1.0
        assert s == pytest.approx(similarity_score(b, a))


def test_similarity_disjoint_tokens_low():
    a = "int main(void) { return 0; }"
    b = "x + y - z * w / v"
    assert similarity_score(a, b) < 0.2


def test_ngram_component_matches_reference():
    a = generate_random_program(5).c_text
    b = re.sub(r"\bcomp\b", "acc", a).replace("var_1", "w")
    ta = [t.lexeme for t in tokenize_c(a)]
    tb = [t.lexeme for t in tokenize_c(b)]
    one = lambda g: 1.0  # noqa: E731
    expected = (ref_bleu(ta, tb, one) + ref_bleu(tb, ta, one)) / 2
    got = similarity_score(a, b, Weights(1.0, 0.0, 0.0))
    assert got == pytest.approx(expected)
    assert 0.0 < got < 1.0


def test_weighted_component_matches_reference():
    from fpdiff.program.lexer import KEYWORDS
    a = generate_random_program(8).c_text
    b = generate_random_program(9).c_text
    ta = [t.lexeme for t in tokenize_c(a)]
    tb = [t.lexeme for t in tokenize_c(b)]
    w = lambda g: 1.0 if any(x in KEYWORDS for x in g) else 0.2  # noqa: E731
    expected = (ref_bleu(ta, tb, w) + ref_bleu(tb, ta, w)) / 2
    assert similarity_score(a, b, Weights(0.0, 1.0, 0.0)) == pytest.approx(expected)


def test_syntax_component_ignores_renaming():
    a = generate_random_program(12).c_text
    b = re.sub(r"\bcomp\b", "acc", a)
    assert b != a
    assert similarity_score(a, b, Weights(0.0, 0.0, 1.0)) == pytest.approx(1.0)


def test_mean_pairwise_equals_brute_force():
    progs = [generate_random_program(s).c_text for s in range(6)]
    rep = mean_pairwise_similarity(progs, keep_matrix=True)
    pairs = list(itertools.combinations(progs, 2))
    assert rep.pairs == 15 and rep.skipped == 0
    assert rep.mean == pytest.approx(sum(similarity_score(a, b) for a, b in pairs) / 15)
    assert rep.matrix[0][0] == 1.0 and rep.matrix[1][2] == rep.matrix[2][1]


def test_mean_pairwise_skips_unlexable():
    progs = [generate_random_program(s).c_text for s in range(3)] + ["/* unterminated"]
    rep = mean_pairwise_similarity(progs)
    assert rep.pairs == 3 and rep.skipped == 3


def test_mean_needs_two():
    with pytest.raises(ValueError):
        mean_pairwise_similarity(["int x;"])


def test_weights_validated():
    with pytest.raises(ValueError):
        Weights(0.5, 0.5, 0.5)


# -- clones

BASE = "double f(double a, int n) { double s = 0.0; for (int i = 0; i < n; ++i) { s += a * 2.0; } return s; }"


def test_clone_keys():
    toks = tokenize_c(BASE)
    renamed = tokenize_c(BASE.replace("s ", "acc ").replace("s;", "acc;"))
    relit = tokenize_c(BASE.replace("2.0", "3.5"))
    assert type1_key(toks) != type1_key(renamed)
    assert type2c_key(toks) == type2c_key(renamed)
    assert type2c_key(toks) != type2c_key(relit)
    assert type2_key(toks) == type2_key(relit)


def test_clone_classes():
    progs = [BASE,
             "/* comment */ " + BASE.replace(" ", "  "),      # Type-1 of 0
             BASE.replace("a", "x"),                          # Type-2c of 0
             BASE.replace("2.0", "7.0").replace("double s", "float s")]  # Type-2 of 0
    rep = detect_clones(progs)
    assert rep.classify(0, 1) is CloneClass.TYPE_1
    assert rep.classify(0, 2) is CloneClass.TYPE_2C
    assert rep.classify(0, 3) is CloneClass.TYPE_2
    assert rep.classify(2, 3) is CloneClass.TYPE_2
    assert rep.participating == 4 and rep.percent == 100.0


def test_type2c_requires_consistent_renaming():
    a = "int f(int x, int y) { return x - y; }"
    b = "int f(int x, int y) { return y - x; }"
    rep = detect_clones([a, b])
    assert rep.classify(0, 1) is CloneClass.TYPE_2


def test_no_clones():
    progs = [generate_random_program(s).c_text for s in range(5)]
    rep = detect_clones(progs)
    assert rep.participating == 0 and rep.percent == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([" ", "\n", "\t  "]))
def test_whitespace_and_comments_preserve_type1(seed, gap):
    a = generate_random_program(seed).c_text
    b = a.replace("\n", f"\n/* note */{gap}")
    rep = detect_clones([a, b])
    assert rep.classify(0, 1) is CloneClass.TYPE_1


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 7), min_size=2, max_size=12))
def test_clone_nesting(choices):
    variants = [BASE, BASE.replace("a", "q"), BASE.replace("2.0", "9.0"),
                BASE.replace("n", "m").replace("2.0", "1.0"), "int main(void) { return 0; }",
                "int main(void) { return 1; }", "int main(void) { int k = 0; return k; }",
                "int g(void) { return 0; }"]
    corpus = [variants[c] for c in choices]
    rep = detect_clones(corpus)
    streams = [tokenize_c(p) for p in corpus]
    for i, j in itertools.combinations(range(len(corpus)), 2):
        t1 = type1_key(streams[i]) == type1_key(streams[j])
        t2c = type2c_key(streams[i]) == type2c_key(streams[j])
        t2 = type2_key(streams[i]) == type2_key(streams[j])
        assert (not t1 or t2c) and (not t2c or t2)
        expect = (CloneClass.TYPE_1 if t1 else CloneClass.TYPE_2C if t2c
                  else CloneClass.TYPE_2 if t2 else CloneClass.NONE)
        assert rep.classify(i, j) is expect
    assert rep.cumulative[CloneClass.TYPE_1] <= rep.cumulative[CloneClass.TYPE_2C] \
        <= rep.cumulative[CloneClass.TYPE_2]


def test_similarity_speed_is_reasonable():
    progs = [generate_random_program(s).c_text for s in range(20)]
    start = time.perf_counter()
    mean_pairwise_similarity(progs)
    assert time.perf_counter() - start < 30
