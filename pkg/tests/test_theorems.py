import math
import random

import numpy as np
import pytest

from naifslab import (
    FactorMapSpec,
    GenerationSchedule,
    MapSpec,
    NAIFS,
    Potential,
    SpaceSpec,
    build_cloud,
    check_basic_properties,
    check_equicontinuity,
    check_factor_conjugacy,
    check_factor_lower,
    check_factor_upper,
    check_power_rule,
    check_truncation_monotonicity,
    growth_rate,
    power_system,
    run_finite_inequality_suite,
)
from naifslab.theorems import FINITE_LEVEL, HOLDS_EXACT, PROXY_LEVEL, VIOLATED, random_explicit_instance

ID = MapSpec("identity")
SWAP2 = MapSpec("permutation_table", (1, 0))
ZERO = Potential("constant", (0.0,))


def two_point():
    cloud = build_cloud(SpaceSpec("finite_explicit", distance_matrix=((0.0, 1.0), (1.0, 0.0))))
    return cloud, GenerationSchedule(prefix=(), cycle=((ID, SWAP2),))


def gen_of_size(k):
    return tuple(ID for _ in range(k))


def test_growth_rate_examples():
    assert growth_rate(GenerationSchedule((), (gen_of_size(1),))).limsup_value == 0.0
    g = growth_rate(GenerationSchedule((), (gen_of_size(3),)))
    assert g.limsup_value == pytest.approx(math.log(3)) and g.liminf_value == g.limsup_value
    g28 = growth_rate(GenerationSchedule((), (gen_of_size(2), gen_of_size(8))))
    assert g28.limsup_value == pytest.approx(2 * math.log(2))


def test_growth_rate_power_identity_exact():
    for sizes in ((2,), (2, 3), (1, 4), (3, 2, 5)):
        sched = GenerationSchedule((), tuple(gen_of_size(s) for s in sizes))
        base = growth_rate(sched).limsup_value
        for n in range(1, 5):
            powered = growth_rate(power_system(sched, n)).limsup_value
            assert math.isclose(powered, n * base, rel_tol=1e-12, abs_tol=1e-12)


def test_basic_properties_two_point_example():
    cloud, sched = two_point()
    psi = Potential("explicit_table", (0.0, 1.0))
    reports = check_basic_properties(cloud, sched, ZERO, psi, eps=0.5, n=2, p=0.5, c=2.0)
    finite = [r for r in reports if r.level == FINITE_LEVEL]
    assert len(finite) == 8
    assert all(r.verdict == HOLDS_EXACT for r in finite)
    proxy = [r for r in reports if r.level == PROXY_LEVEL]
    assert len(proxy) == 1 and proxy[0].name == "pressure/finiteness-link"


def test_basic_properties_equality_cases():
    cloud, sched = two_point()
    psi = Potential("explicit_table", (0.2, -0.7))
    # phi == psi makes the Lipschitz gap vanish; c == 1 makes scaling an identity
    reports = check_basic_properties(cloud, sched, psi, psi, eps=0.5, n=3, p=0.3, c=1.0)
    by_name = {r.name: r for r in reports}
    assert by_name["pressure/lipschitz-in-potential"].lhs == pytest.approx(0.0, abs=1e-12)
    assert by_name["pressure/power-scaling"].lhs == pytest.approx(0.0, abs=1e-12)
    assert by_name["pressure/additive-constant"].verdict == HOLDS_EXACT


def test_power_rule_two_point_example():
    cloud, sched = two_point()
    psi = Potential("explicit_table", (0.2, 0.5))
    reports = check_power_rule(cloud, sched, psi, n=2, m_range=(1, 2, 3), eps_list=[0.5])
    core = [r for r in reports if r.name == "power/spanning-transfer"]
    assert core and core[0].verdict == HOLDS_EXACT
    proxy = [r for r in reports if r.name == "power/upper-bound-proxy"]
    assert proxy and proxy[0].verdict == "holds_within_tol"


def test_power_rule_unit_power_trivial():
    cloud, sched = two_point()
    psi = Potential("explicit_table", (0.2, 0.5))
    reports = check_power_rule(cloud, sched, psi, n=1, m_range=(1, 2), eps_list=[0.5], include_proxy=False)
    assert reports[0].verdict == HOLDS_EXACT
    assert reports[0].slack >= -1e-12


def test_power_rule_rejects_negative_potential():
    cloud, sched = two_point()
    with pytest.raises(ValueError, match="nonnegative"):
        check_power_rule(cloud, sched, Potential("explicit_table", (0.2, -0.1)), n=2, m_range=(1,), eps_list=[0.5])


def test_power_rule_constant_equality_report():
    cloud, sched = two_point()
    reports = check_power_rule(cloud, sched, Potential("constant", (0.4,)), n=2, m_range=(1, 2, 3), eps_list=[0.5])
    eq = [r for r in reports if r.name == "power/constant-potential-equality"]
    assert eq and eq[0].verdict == "holds_within_tol"


def test_truncation_constant_schedule_has_zero_proxy_slack():
    cloud, sched = two_point()
    psi = Potential("explicit_table", (0.1, 0.6))
    reports = check_truncation_monotonicity(cloud, sched, psi, 1, 2, n_range=(2, 3, 4), eps_list=[0.5])
    proxy = [r for r in reports if r.name == "truncation/monotonicity-proxy"][0]
    assert proxy.slack == pytest.approx(0.0, abs=1e-12)
    counting = [r for r in reports if r.name == "truncation/net-counting"][0]
    assert counting.verdict == HOLDS_EXACT


def test_truncation_expanding_prefix_example():
    cloud = build_cloud(SpaceSpec("circle_grid", 256))
    sched = GenerationSchedule(prefix=((MapSpec("doubling"),),), cycle=((ID,),))
    reports = check_truncation_monotonicity(cloud, sched, ZERO, 1, 2, n_range=(2, 3, 4, 5), eps_list=[0.125])
    proxy = [r for r in reports if r.level == PROXY_LEVEL][0]
    assert proxy.verdict == "holds_within_tol"
    assert abs(proxy.lhs) <= 0.2 and abs(proxy.rhs) <= 1e-9


def test_truncation_counting_eight_point_instance():
    rng = random.Random(5)
    cloud, sched = random_explicit_instance(rng, max_points=8, max_maps=2, max_cycle=2)
    dm = cloud.dmatrix()
    eps = float(np.median(dm[~np.eye(len(cloud), dtype=bool)]))
    reports = check_truncation_monotonicity(cloud, sched, ZERO, 1, 3, n_range=(3,), eps_list=[eps], include_proxy=False)
    assert reports[0].verdict == HOLDS_EXACT


def test_equicontinuity_moduli():
    c = build_cloud(SpaceSpec("circle_grid", 256))
    rot = check_equicontinuity(c, GenerationSchedule((), ((MapSpec("rotation", (0.25,)),),)), [0.25, 0.125])
    assert dict(rot.table) == {0.25: 0.25, 0.125: 0.125}
    dbl = check_equicontinuity(c, GenerationSchedule((), ((MapSpec("doubling"),),)), [0.25, 0.125])
    assert dict(dbl.table) == {0.25: 0.125, 0.125: 0.0625}
    i = build_cloud(SpaceSpec("interval_grid", 129))
    tent = check_equicontinuity(i, GenerationSchedule((), ((MapSpec("tent"),),)), [0.125])
    assert dict(tent.table) == {0.125: 0.0625}
    assert rot.passed and dbl.passed and tent.passed


def quotient_factor():
    dm = (
        (0.0, 1.0, 0.4, 1.0),
        (1.0, 0.0, 1.0, 0.4),
        (0.4, 1.0, 0.0, 1.0),
        (1.0, 0.4, 1.0, 0.0),
    )
    src = NAIFS(
        build_cloud(SpaceSpec("finite_explicit", distance_matrix=dm)),
        GenerationSchedule((), ((ID, MapSpec("permutation_table", (1, 2, 3, 0))),)),
    )
    tgt = NAIFS(
        build_cloud(SpaceSpec("finite_explicit", distance_matrix=((0.0, 1.0), (1.0, 0.0)))),
        GenerationSchedule((), ((ID, SWAP2),)),
    )
    return FactorMapSpec(source=src, target=tgt, kind="index_table", table=(0, 1, 0, 1))


def test_factor_lower_quotient():
    rep = check_factor_lower(quotient_factor(), ZERO, n_range=range(1, 7), eps_list=[0.5])
    assert rep.verdict == "holds_within_tol"
    assert abs(rep.lhs) <= 1e-12 and abs(rep.rhs) <= 1e-12


def test_factor_upper_quotient_has_zero_fiber_term():
    rep = check_factor_upper(quotient_factor(), ZERO, n_range=range(1, 7), eps_list=[0.5], fiber_sample=2)
    assert rep.verdict == "holds_within_tol"
    assert "h_term=0.0" in rep.context


def test_factor_conjugacy_identity_slack_zero():
    cloud, sched = two_point()
    factor = FactorMapSpec(
        source=NAIFS(cloud, sched), target=NAIFS(cloud, sched), kind="index_table", table=(0, 1)
    )
    phi = Potential("explicit_table", (0.3, -0.2))
    reports = check_factor_conjugacy(factor, phi, n_range=range(1, 7), eps_list=[0.5])
    eq = [r for r in reports if r.name == "factor/conjugacy-equality"][0]
    assert eq.slack == pytest.approx(0.0, abs=1e-12)
    assert all(r.verdict == "holds_within_tol" for r in reports)


def test_factor_conjugacy_rejects_noninvertible():
    with pytest.raises(ValueError, match="bijection"):
        check_factor_conjugacy(quotient_factor(), ZERO, n_range=range(1, 4), eps_list=[0.5])


def test_mini_random_suite_zero_violations():
    reports = run_finite_inequality_suite(count=25, base_seed=17)
    finite = [r for r in reports if r.level == FINITE_LEVEL]
    assert finite and all(r.verdict == HOLDS_EXACT for r in finite)
    assert not any(r.verdict == VIOLATED for r in reports)


def test_verdict_helpers_respect_exactness():
    from naifslab.theorems import INCONCLUSIVE, _finite_verdict, _proxy_verdict

    assert _finite_verdict(-1.0, 1.0, exact_inputs=True) == VIOLATED
    assert _finite_verdict(-1.0, 1.0, exact_inputs=False) == INCONCLUSIVE
    assert _finite_verdict(0.0, 1.0, exact_inputs=True) == HOLDS_EXACT
    assert _proxy_verdict(-1.0, 0.5, exact_inputs=False) == INCONCLUSIVE
    assert _proxy_verdict(-1.0, 0.5, exact_inputs=True) == VIOLATED
    assert _proxy_verdict(-0.2, 0.5, exact_inputs=False) == "holds_within_tol"
