import csv
import math

import numpy as np
import pytest

from patternclt.decomposition import (NoWitnessError, decompose, estimate_mu_s, extend_sample,
                                      gluing_check, lemma2_terms, make_block_config,
                                      sample_with_planted_events, scan_events, segment_lengths,
                                      waiting_time, write_trace_csv)
from patternclt.patterns import follows, parse_pattern
from patternclt.subsequence import IndexConstraint, longest, longest_bruteforce, longest_constrained

from conftest import CONST3


@pytest.fixture(scope="module")
def fat():
    return make_block_config(parse_pattern("UD"), "fat")


@pytest.fixture(scope="module")
def paper():
    return make_block_config(parse_pattern("UD"), "paper")


def test_paper_cells(paper):
    assert np.allclose(paper.cells(), [(1 / 6, 1 / 3), (2 / 3, 5 / 6)])
    assert math.isclose(paper.volume, 6.0 ** -8, rel_tol=1e-12)
    assert paper.block_len == 8


def test_fat_cells(fat):
    assert np.allclose(fat.cells(), [(0, 0.5), (0.5, 1)])
    assert math.isclose(fat.volume, 2.0 ** -8, rel_tol=1e-12)


@pytest.mark.parametrize("text", ["UD", "UUD", "UDD", "UUDD", "DDU"])
def test_paper_volume_formula(text):
    cfg = make_block_config(parse_pattern(text))
    k = cfg.k
    assert math.isclose(cfg.volume, (3 * k) ** (-4 * k), rel_tol=1e-9)
    lo, hi = np.array(cfg.lo), np.array(cfg.hi)
    order = np.argsort(cfg.tau.tau)
    assert (hi[order][:-1] < lo[order][1:]).all()


def test_config_errors():
    with pytest.raises(NoWitnessError):
        make_block_config(parse_pattern("U"))
    with pytest.raises(NoWitnessError, match="r=3 > k=2"):
        make_block_config(parse_pattern("r=3; 0:123,231,312; 1:123,231,312"))
    with pytest.raises(ValueError, match="mode"):
        make_block_config(parse_pattern("UD"), "thin")
    make_block_config(parse_pattern(CONST3))


def test_scan_examples(fat, paper):
    assert scan_events([0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.4, 0.6], fat).d.tolist() == [True]
    assert scan_events([0.2, 0.7, 0.25, 0.8, 0.3, 0.75, 0.2, 0.7], paper).d.tolist() == [True]
    empty = scan_events(np.full(24, 0.9), fat)
    assert empty.p.size == 0 and empty.q.size == 0 and empty.D_at(3) == 0
    with pytest.raises(ValueError, match="multiple of the block length"):
        scan_events(np.zeros(7), fat)


@pytest.mark.parametrize("text", ["UD", "UUD", "UDD", CONST3])
@pytest.mark.parametrize("mode", ["paper", "fat"])
def test_points_of_cube_follow(text, mode):
    cfg = make_block_config(parse_pattern(text), mode)
    rng = np.random.default_rng(0)
    pts = cfg.block_lo + (cfg.block_hi - cfg.block_lo) * rng.random((10_000, cfg.block_len))
    assert cfg.in_cells(pts).all()
    assert all(follows(row, cfg.pattern) for row in pts)


def test_planting(paper, fat):
    x = sample_with_planted_events(10, [5], paper, 1)
    assert scan_events(x, paper).d[4]
    plain = sample_with_planted_events(10, [], fat, 7)
    assert np.array_equal(plain, np.random.default_rng(7).random(80))
    with pytest.raises(IndexError):
        sample_with_planted_events(10, [11], paper, 1)
    with pytest.raises(ValueError, match="distinct"):
        sample_with_planted_events(10, [3, 3], paper, 1)


def test_scan_identities(fat):
    rng = np.random.default_rng(3)
    for _ in range(20):
        sc = scan_events(rng.random(8 * 3000), fat)
        for j, pj in enumerate(sc.p):
            assert sc.D[pj + 1] == j + 1
        assert (sc.q >= 1).all()
        assert np.array_equal(sc.Q[1:], sc.p[1:] - sc.p[0])
        for n in (0, 500, 2999):
            if sc.D_at(n) >= 1 and sc.first_event_from(n) is not None:
                assert sc.Q[sc.D_at(n)] + sc.p[0] == sc.first_event_from(n)


def test_event_rate(fat):
    d = scan_events(np.random.default_rng(11).random(8 * 10**6), fat).d
    se = math.sqrt(fat.volume * (1 - fat.volume) / d.size)
    assert abs(d.mean() - fat.volume) < 4 * se


def test_adjacent_events_segment(paper):
    x = sample_with_planted_events(6, [3, 4], paper, 2)
    sc = scan_events(x, paper)
    seg = segment_lengths(x, sc, paper)
    assert seg.s.tolist() == [8]
    assert longest_bruteforce(x[20:28], paper.pattern).length == 8


def test_segment_bounds_and_errors(fat):
    rng = np.random.default_rng(4)
    x, sc = extend_sample(np.empty(0), fat, rng, 0, 30)
    seg = segment_lengths(x, sc, fat, mu_s=5.0)
    assert not seg.bound_violations
    assert ((8 <= seg.s) & (seg.s <= 8 * seg.q)).all()
    assert np.allclose(seg.t, seg.s - 5.0 * fat.volume * seg.q)
    one = sample_with_planted_events(4, [2], make_block_config(parse_pattern("UD")), 0)
    with pytest.raises(ValueError, match="at least 2 events"):
        segment_lengths(one, scan_events(one, make_block_config(parse_pattern("UD"))),
                        make_block_config(parse_pattern("UD")))


def test_lemma2_requires_events(paper):
    x = sample_with_planted_events(6, [], paper, 0)
    sc = scan_events(x, paper)
    with pytest.raises(ValueError, match="D_n = 0"):
        lemma2_terms(x, sc, None, 1.0, paper.volume, 6)
    assert decompose(paper, 6, 0, 1.0).terms is None


@pytest.mark.parametrize("mode", ["fat", "paper"])
def test_terms_structure(mode):
    cfg = make_block_config(parse_pattern("UD"), mode)
    for seed in range(30):
        run = decompose(cfg, 200, seed, mu_s=11.0, plant_at=[50, 120])
        t = run.terms
        assert t.term1 >= 0 and t.term5 <= 0
        # terms 2-4 collapse to S_{D_n}, whatever mu_s is
        assert math.isclose(t.term2 + t.term3 + t.term4, t.S_Dn, abs_tol=1e-6)
        assert t.lemma1_ok and t.prefix_ok
        assert -(cfg.k - 1) <= t.discrepancy <= cfg.k
        assert not run.seg.bound_violations
        assert run.summary()["D_n"] == t.D_n


def test_decompose_is_deterministic(fat):
    a = decompose(fat, 300, 5, mu_s=11.0).summary()
    b = decompose(fat, 300, 5, mu_s=11.0).summary()
    assert a == b


def test_gluing_ud(fat, paper):
    for cfg in (fat, paper):
        x = sample_with_planted_events(20, [8], cfg, 9)
        sc = scan_events(x, cfg)
        j = int(np.flatnonzero(sc.p == 7)[0])
        rep = gluing_check(x, sc, cfg, j)
        assert rep.ok, rep.violations
        assert rep.middle == tuple(range(7 * 8 + 3, 7 * 8 + 7))
        assert rep.to_dict()["ok"]


def test_gluing_fails_for_udd():
    # a measured finding: an optimum can skip a middle index of an event
    cfg = make_block_config(parse_pattern("UDD"), "fat")
    x = sample_with_planted_events(10, [5], cfg, 4)
    sc = scan_events(x, cfg)
    j = int(np.flatnonzero(sc.p == 4)[0])
    rep = gluing_check(x, sc, cfg, j)
    assert not rep.ok
    assert 52 in rep.middle
    best = longest(x, cfg.pattern)
    avoid = longest_constrained(x, cfg.pattern, IndexConstraint(forbidden={52}))
    assert avoid.length == best.length and 52 not in avoid.witness
    assert follows(x[np.array(avoid.witness) - 1], cfg.pattern)


def test_mu_s_pilot(fat, paper):
    mu, se = estimate_mu_s(fat, segments=200, seed=1)
    assert mu >= 8 and 0 < se < mu
    assert estimate_mu_s(paper, segments=200, seed=1) == (mu, se)


def test_waiting_time_nonnegative(fat):
    rng = np.random.default_rng(0)
    assert all(waiting_time(fat, 50, rng) >= 0 for _ in range(20))


def test_trace_csv(tmp_path, fat):
    run = decompose(fat, 400, 3, mu_s=11.0, plant_at=[10, 200])
    path = tmp_path / "trace.csv"
    write_trace_csv(path, run.scan, run.seg)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["j", "d_j", "p_j", "q_j", "s_j", "t_j"]
    # row j = 0 carries p_0 only; segments start at j = 1
    assert rows[1][2] == str(run.scan.p[0]) and rows[1][4] == ""
    assert rows[2][2] == str(run.scan.p[1]) and rows[2][4] == str(run.seg.s[0])
