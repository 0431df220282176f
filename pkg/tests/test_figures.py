import numpy as np
import pytest

from reactive_paths.figures import (figure_fig1, figure_fig2, figure_fig3, gap_inversions,
                                    gumbel_overlay)
from reactive_paths.limit_laws import theorem_1_4_law
from reactive_paths.potentials import Potential


def test_overlay_integrates_to_one():
    for eps in (1.0, 0.01):
        law = theorem_1_4_law(Potential.quartic(), -0.89, 0.9, eps)
        for centered in (False, True):
            t, d = gumbel_overlay(law, 4001, centered)
            assert np.trapezoid(d, t) == pytest.approx(1.0, abs=1e-9)


def test_gap_inversions_counts_beyond_noise():
    head = ("log_eps", "epsilon", "mean", "ci_low", "ci_high", "theory")
    rows = [head, (0, 1, 3.0, 2.9, 3.1, 2.0), (0, 1, 2.5, 2.4, 2.6, 2.0),
            (0, 1, 2.55, 2.45, 2.65, 2.0), (0, 1, 3.0, 2.9, 3.1, 2.0)]
    # +0.05 sits inside the half-width 0.1, the later +0.45 does not
    assert gap_inversions(rows) == 1


@pytest.fixture(scope="module")
def fig1():
    return figure_fig1({})


@pytest.mark.slow
def test_fig1_defaults(fig1):
    rows, meta = fig1
    assert rows[0] == ("series", "epsilon", "bin_center", "density")
    assert not meta["truncated"]
    assert meta["completed_epsilons"] == [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]
    top = meta["runs"]["1.0"]
    assert top["method"] == "rejection" and top["n"] >= 10_000
    assert meta["centered_ks"]["0.02|0.01"] <= 0.05
    series = {r[0] for r in rows[1:]}
    assert series == {"density", "centered", "gumbel", "gumbel_centered"}
    for e in (1.0, 0.01):
        pts = np.array([(r[2], r[3]) for r in rows[1:] if r[0] == "gumbel" and r[1] == e])
        assert np.trapezoid(pts[:, 1], pts[:, 0]) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.slow
@pytest.mark.parametrize("fig,theory_001", [(figure_fig2, 4.96050), (figure_fig3, 6.57622)])
def test_mean_figures(fig, theory_001):
    rows, meta = fig({})
    assert not meta["truncated"]
    col = {c: i for i, c in enumerate(rows[0])}
    body = rows[1:]
    assert all(r[col["method"]] == "ams" for r in body)
    last = next(r for r in body if r[col["epsilon"]] == 0.01)
    assert last[col["theory"]] == pytest.approx(theory_001, abs=2e-5)
    for r in body:
        assert r[col["ci_low"]] <= r[col["mean"]] <= r[col["ci_high"]]
    assert gap_inversions(rows) <= 1
    # the splitting means agree with the exact conditioned mean
    for r in body:
        half = r[col["ci_high"]] - r[col["mean"]]
        assert abs(r[col["mean"]] - r[col["exact"]]) < 2.5 * half + 0.02
