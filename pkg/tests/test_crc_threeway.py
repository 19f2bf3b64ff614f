import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crcmap.crc_threeway import (
    assign_zones,
    calibrate_cost_weighted,
    calibrate_three_way,
    prevalence_weighted_bound,
    shift_diagnostics,
)
from crcmap.domain import CostSpec, Prevalence, ShiftInterval, ZoneThresholds
from crcmap.errors import DegeneratePrevalence, Infeasible, NoNegatives, NoPositives, ValidationError
from crcmap.synth import generate, model_from_auroc

from conftest import flat
from oracles import cost_risk, random_instance, smallest_feasible


def test_no_shift_has_unit_weights():
    d = shift_diagnostics(Prevalence(0.05), 1.0)
    assert d.w1 == 1.0 and d.w0 == 1.0 and d.delta_l1 == 0.0


@pytest.mark.parametrize("rho,expected", [(0.9, 0.1005), (1.1, 0.0995)])
def test_shift_mismatch_values(rho, expected):
    # independent evaluation: w1 = rho / (rho*pi1 + pi0), w0 = 1 / (rho*pi1 + pi0)
    pi1 = 0.05
    denom = rho * pi1 + (1 - pi1)
    oracle = abs(rho / denom - 1) + abs(1 / denom - 1)
    d = shift_diagnostics(Prevalence(pi1), rho)
    assert d.delta_l1 == pytest.approx(oracle, rel=1e-12)
    assert d.delta_l1 == pytest.approx(expected, abs=5e-5)
    assert d.delta_l1 == abs(d.w1 - 1) + abs(d.w0 - 1)


@pytest.mark.parametrize("pi1", [0.0, 1.0])
def test_degenerate_prevalence(pi1):
    with pytest.raises(DegeneratePrevalence):
        shift_diagnostics(Prevalence(pi1), 0.9)


def test_prevalence_weighted_bound_values():
    assert prevalence_weighted_bound(CostSpec(5, 1), Prevalence(0.05)) == 0.95
    assert prevalence_weighted_bound(CostSpec(1, 1), Prevalence(0.5)) == 0.5


HAND = ([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])


def test_cost_weighted_hand_case_small_n_infeasible():
    with pytest.raises(Infeasible):
        calibrate_cost_weighted(flat(*HAND), CostSpec(5, 1), 0.5)


def test_cost_weighted_hand_case_scaled():
    s = np.repeat(HAND[0], 100)
    y = np.repeat(HAND[1], 100)
    lam = calibrate_cost_weighted(flat(s, y), CostSpec(5, 1), 0.5)
    assert lam == np.float32(0.2)
    assert lam == pytest.approx(smallest_feasible(s.astype(np.float32), y, 5, 1, 0.5))
    assert cost_risk(np.float32(s), y, lam, 5, 1) + 5 / 401 <= 0.5


def test_cost_weighted_vacuous_level():
    s, y = random_instance(np.random.default_rng(0))
    lam = calibrate_cost_weighted(flat(s, y), CostSpec(1, 1), 1.0)
    assert lam == 0.0


def test_cost_weighted_requires_both_classes():
    with pytest.raises(NoPositives):
        calibrate_cost_weighted(flat([0.1, 0.2], [0, 0]), CostSpec(), 0.5)
    with pytest.raises(NoNegatives):
        calibrate_cost_weighted(flat([0.1, 0.2], [1, 1]), CostSpec(), 0.5)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.floats(0.5, 5),
    st.floats(0.5, 5),
    st.floats(0.05, 2.0),
)
def test_cost_weighted_matches_brute_force(seed, c_fn, c_fp, alpha):
    s, y = random_instance(np.random.default_rng(seed), n_max=60)
    want = smallest_feasible(s, y, c_fn, c_fp, alpha)
    if want is None:
        with pytest.raises(Infeasible):
            calibrate_cost_weighted(flat(s, y), CostSpec(c_fn, c_fp), alpha)
    else:
        assert calibrate_cost_weighted(flat(s, y), CostSpec(c_fn, c_fp), alpha) == want


def exact_prevalence_set(n=2000, pi1=0.05, seed=0):
    rng = np.random.default_rng(seed)
    n_pos = int(round(n * pi1))
    y = np.zeros(n, int)
    y[:n_pos] = 1
    s = np.where(y == 1, rng.beta(5, 2, n), rng.beta(1, 30, n))
    return flat(s, y)


def test_three_way_worked_example_constants():
    z = calibrate_three_way(exact_prevalence_set(), CostSpec(5, 1), 0.5, ShiftInterval(0.9, 1.1))
    assert z.b_pw == 0.95
    assert z.shift_scale_s == 0.19
    assert 0.018 <= z.shift_scale_s * z.delta_lo_l1 <= 0.021
    assert z.eps_max == pytest.approx(0.95 * z.delta_lo_l1 + 0.95 / 2001, rel=1e-12)
    assert z.alpha_safe == z.alpha_cw - z.eps_max
    assert z.lambda_min <= z.lambda_hat <= z.lambda_max


def test_three_way_no_shift_degenerates_to_binary():
    z = calibrate_three_way(exact_prevalence_set(), CostSpec(5, 1), 0.5, ShiftInterval(1.0, 1.0))
    assert z.lambda_min == z.lambda_max == z.lambda_hat


def test_three_way_infeasible_when_interval_too_wide():
    with pytest.raises(Infeasible):
        calibrate_three_way(exact_prevalence_set(), CostSpec(5, 1), 0.5, ShiftInterval(0.1, 10.0))


def test_three_way_alpha_range():
    with pytest.raises(ValidationError):
        calibrate_three_way(exact_prevalence_set(), CostSpec(5, 1), 6.0, ShiftInterval())


def test_safe_collapse_at_low_prevalence():
    data = generate(model_from_auroc(0.969, 0.05), 10, 64, 64, seed=11)
    z = calibrate_three_way(data, CostSpec(5, 1), 0.5, ShiftInterval(0.9, 1.1))
    assert z.lambda_hat <= 0.02
    assert z.shift_scale_s * z.delta_lo_l1 >= z.lambda_hat
    assert z.lambda_min == 0.0
    _, rep = assign_zones(data, z)
    assert rep.frac_safe == 0.0
    assert rep.frac_monitor > rep.frac_evacuate


def test_widening_interval_never_shrinks_monitor_band():
    data = generate(model_from_auroc(0.9, 0.3), 4, 32, 32, seed=1)
    widths = []
    for r in (0.0, 0.05, 0.1, 0.2):
        z = calibrate_three_way(data, CostSpec(2, 1), 0.9, ShiftInterval(1 - r, 1 + r))
        widths.append((z.lambda_min, z.lambda_max))
    # same base threshold is not guaranteed (alpha_safe moves), so compare mismatches
    deltas = [
        (shift_diagnostics(Prevalence(0.3), 1 - r).delta_l1, shift_diagnostics(Prevalence(0.3), 1 + r).delta_l1)
        for r in (0.0, 0.05, 0.1, 0.2)
    ]
    assert all(a[0] <= b[0] and a[1] <= b[1] for a, b in zip(deltas, deltas[1:]))
    assert all(hi - lo >= 0 for lo, hi in widths)


def zones(lmin, lmax, alpha_cw=0.5):
    return ZoneThresholds(lmin, lmax, lmin, alpha_cw, 0.4, 0.1, 0.95, 0.19, 0.1, 0.1, 0.05, 4, 5.0, 1.0, 0.9, 1.1)


def test_assign_all_evacuate():
    data = flat([0.0, 0.2, 0.9, 0.4], [0, 1, 1, -1])
    codes, rep = assign_zones(data, zones(0.0, 0.0))
    assert codes.reshape(-1).tolist() == [2, 2, 2, -1]
    assert rep.frac_evacuate == 1.0 and rep.coverage == 1.0 and rep.d_monitor == 0.0


def test_assign_all_monitor():
    data = flat([0.0, 0.2, 0.9], [0, 1, 1])
    codes, rep = assign_zones(data, zones(0.0, 0.95))
    assert rep.frac_monitor == 1.0 and rep.d_monitor == 1.0
    assert rep.decided_risk is None and rep.decided_bound is None
    assert rep.coverage == 1.0 and rep.coverage_evacuate == 0.0


def test_assign_mixed_decided_risk():
    # SAFE: 0.05(pos, miss), 0.1(neg); MONITOR: 0.3(neg); EVACUATE: 0.7(neg, false alarm), 0.8(pos)
    data = flat([0.05, 0.1, 0.3, 0.7, 0.8], [1, 0, 0, 0, 1])
    _, rep = assign_zones(data, zones(0.2, 0.5))
    assert rep.frac_safe == pytest.approx(0.4)
    assert rep.frac_monitor == pytest.approx(0.2)
    assert rep.frac_evacuate == pytest.approx(0.4)
    assert rep.decided_risk == pytest.approx((5 * 1 + 1 * 1) / 4)
    assert rep.decided_bound == pytest.approx(0.5 / 0.8)
    assert rep.coverage == 0.5 and rep.coverage_evacuate == 0.5


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 1), st.floats(0, 1))
def test_zone_partition(seed, a, b):
    s, y = random_instance(np.random.default_rng(seed))
    _, rep = assign_zones(flat(s, y), zones(min(a, b), max(a, b)))
    assert math.isclose(rep.frac_safe + rep.frac_monitor + rep.frac_evacuate, 1.0, abs_tol=1e-9)
