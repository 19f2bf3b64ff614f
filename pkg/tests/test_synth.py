import math

import numpy as np
import pytest

from crcmap.domain import CostSpec, ShiftInterval
from crcmap.errors import AlphaOutOfRange, AurocOutOfRange, TooFewPositives, ValidationError
from crcmap.metrics import auroc
from crcmap.synth import (
    BiNormalModel,
    Link,
    closed_form_set_size,
    collapse_frontier,
    generate,
    mc_fnr_guarantee,
    mc_set_size,
    mc_threeway_check,
    model_from_auroc,
)

# tabulated standard normal quantiles
PHI_INV = {0.969: 1.866296, 0.95: 1.644854, 0.9: 1.281552, 0.75: 0.674490}


@pytest.mark.parametrize("a", sorted(PHI_INV))
def test_mu1_from_tabulated_quantiles(a):
    assert model_from_auroc(a, 0.1).mu1 == pytest.approx(math.sqrt(2) * PHI_INV[a], abs=2e-6)


def test_mu1_reference_value():
    assert model_from_auroc(0.969, 0.05).mu1 == pytest.approx(2.639, abs=5e-4)
    assert model_from_auroc(0.5, 0.05).mu1 == 0.0


@pytest.mark.parametrize("a", [0.49, 1.0, 1.2])
def test_auroc_range(a):
    with pytest.raises(AurocOutOfRange):
        model_from_auroc(a, 0.1)


def test_model_roundtrips_auroc():
    assert model_from_auroc(0.9, 0.2).auroc == pytest.approx(0.9, abs=1e-12)


def test_empirical_auroc():
    data = generate(model_from_auroc(0.969, 0.05), 1, 1000, 1000, seed=0)
    assert auroc(data) == pytest.approx(0.969, abs=0.003)


def test_prevalence_within_three_sigma():
    n, pi1 = 200_000, 0.05
    data = generate(model_from_auroc(0.9, pi1), 2, 100, 1000, seed=1)
    sigma = math.sqrt(pi1 * (1 - pi1) / n)
    assert abs(np.mean(data.labels) - pi1) <= 3 * sigma


def test_prevalence_override_keeps_score_law():
    m = model_from_auroc(0.9, 0.05)
    data = generate(m, 1, 200, 1000, seed=2, prevalence=0.2)
    assert np.mean(data.labels) == pytest.approx(0.2, abs=0.005)
    s, y = data.valid_pixels()
    # negatives stay N(0, 1) on the latent scale under the same link
    assert np.median(s[y == 0]) == pytest.approx(float(m.to_score(np.array([0.0]))[0]), rel=0.02)


def test_generate_is_deterministic():
    m = model_from_auroc(0.9, 0.1)
    assert generate(m, 3, 4, 5, seed=7) == generate(m, 3, 4, 5, seed=7)
    assert generate(m, 3, 4, 5, seed=7) != generate(m, 3, 4, 5, seed=8)


def test_scores_in_unit_interval():
    data = generate(model_from_auroc(0.99, 0.5, Link.LOGISTIC), 2, 50, 50, seed=0)
    assert data.scores.min() >= 0.0 and data.scores.max() <= 1.0


def test_bad_dimensions():
    with pytest.raises(ValidationError):
        generate(model_from_auroc(0.9, 0.1), 0, 4, 4, seed=0)
    with pytest.raises(ValidationError):
        BiNormalModel(1.0, 0.0)


def test_closed_form_limits():
    m = model_from_auroc(0.969, 0.05)
    assert closed_form_set_size(m, 0.05) == pytest.approx(0.19949, abs=5e-5)
    assert closed_form_set_size(m, 1e-12) == pytest.approx(1.0, abs=1e-5)
    assert closed_form_set_size(m, 1 - 1e-12) == pytest.approx(0.0, abs=1e-6)
    # uninformative classifier flags a 1 - alpha share of everything
    assert closed_form_set_size(model_from_auroc(0.5, 0.05), 0.2) == pytest.approx(0.8)
    with pytest.raises(AlphaOutOfRange):
        closed_form_set_size(m, 0.0)


def test_closed_form_orders_by_auroc():
    sizes = [closed_form_set_size(model_from_auroc(a, 0.05), 0.1) for a in (0.8, 0.9, 0.969, 0.99)]
    assert sizes == sorted(sizes, reverse=True)


def test_set_size_is_link_invariant():
    kw = dict(n_cal_pixels=20_000, n_test_pixels=20_000, trials=3, seed=5)
    a = mc_set_size(model_from_auroc(0.9, 0.1, Link.LOGISTIC), 0.1, **kw)
    b = mc_set_size(model_from_auroc(0.9, 0.1, Link.POSTERIOR), 0.1, **kw)
    assert a == b


def test_too_few_positives():
    with pytest.raises(TooFewPositives):
        mc_fnr_guarantee(model_from_auroc(0.9, 0.001), 0.1, n_cal_pixels=1000, trials=1)


def test_fnr_guarantee_small_run():
    r = mc_fnr_guarantee(model_from_auroc(0.9, 0.2), 0.1, 5000, 5000, trials=60, seed=1)
    assert r.trials == 60 and r.target == 0.1
    assert r.within_bound(3.0)
    assert 0.0 <= r.violation_fraction <= 1.0


def test_threeway_check_small_run():
    r = mc_threeway_check(
        model_from_auroc(0.969, 0.05), CostSpec(5, 1), 0.5, ShiftInterval(0.9, 1.1),
        n_cal_pixels=5000, n_test_pixels=5000, trials=20, seed=0, rho_test=None,
    )
    assert r.details["lambda_min_zero_fraction"] == 1.0
    assert r.details["safe_empty_fraction"] == 1.0
    assert r.mean_risk <= r.target


def test_collapse_frontier_shape():
    rows = collapse_frontier(0.969, [0.05, 0.3], CostSpec(5, 1), 0.5, ShiftInterval(0.9, 1.1),
                             n_cal_pixels=5000, trials=3)
    assert rows == [(0.05, 1.0), (0.3, 1.0)]
    rows = collapse_frontier(0.969, [0.05, 0.3], CostSpec(5, 1), 0.5, ShiftInterval(1.0, 1.0),
                             n_cal_pixels=5000, trials=3)
    assert rows == [(0.05, 0.0), (0.3, 0.0)]
