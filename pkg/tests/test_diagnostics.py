import json
from fractions import Fraction

import pytest

from groupwalk import (
    FreeAbelian,
    FreeGroup,
    GSet,
    SpecMismatchError,
    build_measure,
    control_experiment,
    delta,
    nondisjointness_report,
    tv_curve,
    uniform,
)
from groupwalk.presets import preset_state

Z = FreeAbelian(1)
F2 = FreeGroup(2)


def _srw():
    gens = GSet(F2, frozenset([(1,), (-1,), (2,), (-2,)]))
    return uniform(gens, mode="exact"), delta(F2, mode="exact")


def test_free_srw_curve_is_exactly_two():
    # t*rho_n and rho_n live on words of different parity: d_n = 2 always
    nu, mu = _srw()
    curve = tv_curve(mu, (1,), nu, n_max=5)
    assert [p.value for p in curve.points] == [2.0] * 6
    assert [p.bracket for p in curve.points] == [0.0] * 6


def test_curve_contraction_under_budget(f2xz_nu):
    mu = delta(f2xz_nu.group)
    t = ((), (1,))
    curve = tv_curve(mu, t, f2xz_nu, n_max=5, budget=30_000)
    pts = curve.points
    assert len(pts) == 6 and not curve.budget_flag
    for prev, cur in zip(pts, pts[1:]):
        growth = cur.bracket - prev.bracket
        assert growth >= 0
        assert cur.value <= prev.value + 2 * growth + 1e-12


def test_curve_early_stop(z_state):
    nu = build_measure(z_state, mode="exact")
    mu = delta(Z, mode="exact")
    curve = tv_curve(mu, (1,), nu, n_max=50, stop_below=0.5)
    assert curve.stopped_early
    assert curve.points[-1].value <= 0.5
    assert curve.points[-1].n < 50


def test_curve_rejects_bad_args(z_state):
    nu = build_measure(z_state, mode="exact")
    mu = delta(Z, mode="exact")
    with pytest.raises(SpecMismatchError):
        tv_curve(mu, (1,), nu, n_max=0)


def test_report_pass_on_amenable(z_state):
    nu = build_measure(z_state, mode="exact")
    mu = delta(Z, mode="exact")
    S = GSet(Z, frozenset([(1,)]))
    rep = nondisjointness_report(mu, S, nu, n_max=50, fingerprint="f" * 16, seed=4)
    assert rep.verdict == "pass"
    assert rep.bound == 0.0  # |S| = 1
    assert min(r[1] for r in rep.per_n_min) <= rep.bound + rep.slack


def test_report_never_fails_only_inconclusive():
    nu, mu = _srw()
    S = GSet(F2, frozenset([(1,)]))
    rep = nondisjointness_report(mu, S, nu, n_max=4, slack=0.5)
    assert rep.verdict == "inconclusive"  # free walk stays at 2, bound is 0


def test_report_bound_scales_with_s():
    nu, mu = _srw()
    S = GSet(F2, frozenset([(1,), (-1,)]))
    rep = nondisjointness_report(mu, S, nu, n_max=2, slack=0.0)
    assert rep.bound == pytest.approx(1.0)  # 2 * (1 - 1/2) * 1


def test_report_csv_and_json_shape(z_state):
    nu = build_measure(z_state, mode="exact")
    mu = delta(Z, mode="exact")
    S = GSet(Z, frozenset([(1,)]))
    rep = nondisjointness_report(mu, S, nu, n_max=10, fingerprint="abc", seed=9)
    csv = rep.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "# fingerprint=abc seed=9"
    assert lines[1] == "t,n,value,bracket"
    row = lines[2].split(",")
    assert row[0] == "(1)" and row[1] == "0" and float(row[2]) == 2.0
    doc = json.loads(rep.to_json())
    assert doc["verdict"] == "pass"
    assert doc["fingerprint"] == "abc" and doc["seed"] == 9
    # every curve point appears in the csv
    n_rows = sum(len(c["points"]) for c in doc["curves"])
    assert len(lines) == 2 + n_rows


def test_control_free_group():
    rep = control_experiment("free-group-srw", seed=1)
    assert rep.verdict == "pass"
    d = {r[0]: r[1] for r in rep.per_n_min}
    assert d[1] == 2.0
    assert d[10] >= 1.0


def test_control_amenable():
    rep = control_experiment("amenable-sanity", seed=1, stages=40)
    assert rep.verdict == "pass"
    assert min(r[1] for r in rep.per_n_min) < 0.2


def test_control_aliases():
    assert control_experiment("f2-control", seed=1).verdict == "pass"
    with pytest.raises(SpecMismatchError):
        control_experiment("no-such-control")
