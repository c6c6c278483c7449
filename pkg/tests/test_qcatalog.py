import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bivisar.marginals import NegBin, Poisson
from bivisar.qcatalog import (
    KINDS,
    NEGBIN_ONLY,
    POISSON_ONLY,
    QKindError,
    RepairError,
    ans_constant,
    make_q,
    parse_q,
    q_values,
    repair_q,
)
from oracles import expect

P13 = Poisson(1.3)
NB = NegBin(1.2, 2.0)
C_ANS = 0.6663890045814244  # E[(phi/(phi+mu))**X], mpmath summation
L_POIS = 0.4396586157647823  # E[exp(-X)] for Poisson(1.3), mpmath summation


def kinds_for(marginal):
    for kind in KINDS:
        if kind in POISSON_ONLY and not marginal.is_poisson:
            continue
        if kind in NEGBIN_ONLY and marginal.is_poisson:
            continue
        if kind in ("hat_s", "general_s"):
            for s in (1, 2, 3, 4):
                yield kind, s
        else:
            yield kind, None


def test_dc_values():
    q = make_q("dc", P13)
    assert [q(0), q(1), q(2)] == [-1.3, 1.0, 0.0]


def test_catalog_values():
    lam = 1.3
    assert list(make_q("hat", P13).values(3)) == [-lam * lam, lam, 0.0]
    assert list(make_q("tilde", P13).values(4)) == [-lam * lam, -lam, 4.0, 0.0]
    assert list(make_q("general_s", P13, 3).values(5)) == pytest.approx([-lam**3, -lam**2, -2 * lam, 18.0, 0.0])
    mu, phi = 1.2, 2.0
    assert list(make_q("nb", NB).values(3)) == pytest.approx([-phi * mu / (phi + mu), 1.0, 0.0])
    assert list(make_q("hat_nb", NB).values(3)) == pytest.approx([-mu**2, mu * (phi + mu) / phi, 0.0])
    assert list(make_q("tilde_nb", NB).values(4)) == pytest.approx(
        [-mu**2, -mu * (phi + mu) / phi, 4 * mu * phi / (phi + mu), 0.0])
    p0, p1 = NB.pmf(0), NB.pmf(1)
    assert list(make_q("two_p", NB).values(3)) == pytest.approx([mu, -mu * p0 / p1, 0.0])
    assert list(make_q("three_p", NB).values(3)) == pytest.approx([-mu * p1 / p0, mu, 0.0])


def test_ans_and_laplace_examples():
    assert make_q("ans", NB)(0) == pytest.approx(1 - C_ANS, abs=1e-12)
    assert float(ans_constant(1.2, 2.0)) == pytest.approx(C_ANS, abs=1e-14)
    assert make_q("laplace", P13)(0) == pytest.approx(1 - L_POIS, abs=1e-12)


def test_ans_constant_is_expectation():
    for mu in (0.3, 1.2, 3.5):
        for phi in (0.5, 2.0, 20.0):
            th = phi / (phi + mu)
            ref = expect(lambda x: th**x, "negbin", mu, phi, n=500)
            assert float(ans_constant(mu, phi)) == pytest.approx(ref, abs=1e-12)


def test_reductions_are_exact():
    for lam in (0.3, 1.0, 1.3, 2.7):
        m = Poisson(lam)
        dc = make_q("dc", m).values(11)
        assert np.array_equal(make_q("one_p", m).values(11), dc)
        assert np.array_equal(make_q("general_s", m, 1).values(11), dc)
        assert np.array_equal(make_q("hat_s", m, 1).values(11), dc)
        assert np.array_equal(make_q("three_p", m).values(11), make_q("hat", m).values(11))
        assert np.array_equal(make_q("general_s", m, 2).values(11), make_q("tilde", m).values(11))
        assert np.array_equal(make_q("hat_s", m, 2).values(11), make_q("hat", m).values(11))
    assert np.array_equal(make_q("nb", NB).values(11), make_q("one_p", NB).values(11))


def test_ans_equals_laplace_at_special_mean():
    for phi in (0.5, 1.0, 2.0, 5.0):
        m = NegBin(phi * (math.e - 1), phi)
        a = make_q("ans", m).values(21)
        s = make_q("laplace", m).values(21)
        assert np.max(np.abs(a - s)) < 1e-10


def test_residual_examples():
    assert abs(make_q("dc", P13).zero_mean_residual()) < 1e-12
    assert abs(make_q("ans", NB).zero_mean_residual()) < 1e-10
    assert make_q("tilde_nb", NB).zero_mean_residual() == pytest.approx(-0.630615234375, abs=1e-12)


def test_all_kinds_zero_mean_on_grid():
    for mean in (0.2, 0.7, 1.3, 2.5, 4.0):
        for m in [Poisson(mean)] + [NegBin(mean, f) for f in (0.5, 1.0, 2.0, 5.0, 20.0)]:
            for kind, s in kinds_for(m):
                q = make_q(kind, m, s)
                if kind == "tilde_nb":
                    continue
                assert abs(q.zero_mean_residual()) < 1e-8, (kind, s, m)


def test_tilde_nb_defect_and_repair():
    q = make_q("tilde_nb", NB)
    assert not q.is_admissible()
    fixed = repair_q(q)
    assert fixed.repaired and fixed.name == "repaired[tilde_nb]"
    assert fixed(2) == pytest.approx(4 * 3.2**2 / (2 * 3), rel=1e-12)
    assert fixed(2) == pytest.approx(6.826666666666667, rel=1e-12)
    assert abs(fixed.zero_mean_residual()) < 1e-12
    assert fixed(0) == q(0) and fixed(1) == q(1)


def test_tilde_nb_zero_mean_on_its_special_curve():
    from scipy.optimize import brentq

    phi = 10.0
    mu = brentq(lambda m: m * phi**2 * (phi + 1) - (phi + m) ** 3, 0.1, 5.0)
    assert make_q("tilde_nb", NegBin(mu, phi)).is_admissible()


def test_repair_leaves_admissible_unchanged():
    q = make_q("tilde", P13)
    assert repair_q(q) is q
    assert repair_q(q)(2) == 4.0
    assert repair_q(make_q("dc", P13)).values(5).tolist() == make_q("dc", P13).values(5).tolist()


def test_repair_errors():
    with pytest.raises(RepairError):
        repair_q(make_q("laplace", P13))
    with pytest.raises(RepairError):
        make_q("ans", NB, repaired=True)


def test_bounds_examples():
    assert make_q("dc", P13).bounds() == (-1.3, 1.0)
    lo, hi = make_q("laplace", P13).bounds()
    assert (lo, hi) == pytest.approx((-L_POIS, 1 - L_POIS), abs=1e-12)
    lo, hi = make_q("ans", NB).bounds()
    assert (lo, hi) == pytest.approx((-C_ANS, 1 - C_ANS), abs=1e-12)


def test_bounds_cover_scanned_values():
    for m in (P13, NB, Poisson(3.0), NegBin(0.4, 0.7)):
        for kind, s in kinds_for(m):
            q = make_q(kind, m, s)
            lo, hi = q.bounds()
            vals = q.values(q.summation_limit() + 1)
            assert lo <= vals.min() + 1e-15 and vals.max() <= hi + 1e-15
            assert lo < 0 < hi


@pytest.mark.parametrize("kind,m", [("ans", P13), ("nb", P13), ("dc", NB), ("tilde", NB), ("hat_nb", P13)])
def test_family_mismatch(kind, m):
    with pytest.raises(QKindError):
        make_q(kind, m)


@pytest.mark.parametrize("s", [0, 1.5, None, -2])
def test_order_validation(s):
    with pytest.raises(QKindError):
        make_q("hat_s", P13, s)


def test_vectorized_matches_scalar():
    means = np.array([0.5, 1.3, 2.0])
    x = np.array([0, 1, 5])
    vals = q_values("tilde", "poisson", means, None, x)
    assert vals.tolist() == [make_q("tilde", Poisson(m))(int(k)) for m, k in zip(means, x)]
    vals = q_values("ans", "negbin", means, np.array([1.0, 2.0, 3.0]), x)
    ref = [make_q("ans", NegBin(m, f))(int(k)) for m, f, k in zip(means, (1.0, 2.0, 3.0), x)]
    assert vals == pytest.approx(ref, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.2, 40.0), st.integers(1, 5))
def test_zero_mean_property(mu, phi, s):
    for q in (make_q("general_s", Poisson(mu), s), make_q("hat_s", Poisson(mu), s),
              make_q("ans", NegBin(mu, phi)), make_q("laplace", NegBin(mu, phi)),
              make_q("two_p", NegBin(mu, phi)), make_q("hat_nb", NegBin(mu, phi))):
        scale = max(1.0, np.abs(q.values(q.summation_limit() + 1)).max())
        assert abs(q.zero_mean_residual()) < 1e-8 * scale


def test_parse_q():
    assert parse_q("dc") == ("dc", None, False)
    assert parse_q("general_s:3") == ("general_s", 3, False)
    assert parse_q("repaired:tilde_nb") == ("tilde_nb", None, True)
    with pytest.raises(QKindError):
        parse_q("nope")
