import numpy as np
import pytest

from hippo.activation import ActivationScheme
from hippo.analysis import solve_centralized
from hippo.datasets import synth_least_squares
from hippo.objectives import LocalObjective, Regularizer, estimate_constants
from hippo.protocol import ConfigurationError, HyperParams, NetworkState, UpdateMode, step_active
from hippo.simulator import RunConfig, cost_model, run
from hippo.topology import path_topology


def small_problem(m=3, d=2, seed=0, gamma=0.3):
    topo = path_topology(m)
    parts, _ = synth_least_squares(m, d, 8, 0.2, seed=seed)
    objs = [LocalObjective(A, b) for A, b in parts]
    consts = estimate_constants(objs)
    reg = Regularizer("l1", gamma=gamma)
    hp = HyperParams(mu_z=2.0, mu_theta=1.0, epsilon=consts.M_f, certified_mode=True)
    return topo, objs, reg, hp


def test_tiny_synchronous_run_converges():
    topo, objs, reg, hp = small_problem()
    oracle = solve_centralized(objs, reg)
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=500, newton_fraction=1.0, tolerance=1e-8, seed=0)
    trace = run(topo, objs, reg, cfg, l_star=oracle.value)
    assert trace.rel_loss[-1] <= 1e-8
    assert trace.t[-1] <= 500


def test_zero_iteration_run_single_row():
    topo, objs, reg, hp = small_problem()
    oracle = solve_centralized(objs, reg)
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=0, seed=0)
    trace = run(topo, objs, reg, cfg, l_star=oracle.value)
    assert len(trace) == 1
    assert trace.t[0] == 0
    assert trace.rel_loss[0] == 1.0


def test_identical_seeds_identical_traces():
    topo, objs, reg, hp = small_problem()
    oracle = solve_centralized(objs, reg)
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="bernoulli", m=3,
                                                            probs=(0.6, 0.6, 0.6), seed=4),
                    iterations=100, newton_fraction=0.5, tolerance=0.0, seed=1)
    a = run(topo, objs, reg, cfg, l_star=oracle.value)
    b = run(topo, objs, reg, cfg, l_star=oracle.value)
    assert a.to_csv() == b.to_csv()


def test_trace_csv_header_and_empty_lyapunov():
    topo, objs, reg, hp = small_problem()
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=3, tolerance=0.0, seed=0)
    trace = run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "t,active_count,rel_loss,consensus_res,reg_res,lyapunov,comm_cost,comp_cost"
    assert lines[1].split(",")[5] == ""  # no monitor attached


def test_deferred_normalization():
    topo, objs, reg, hp = small_problem()
    oracle = solve_centralized(objs, reg)
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=40, newton_fraction=1.0, tolerance=0.0, seed=0)
    raw = run(topo, objs, reg, cfg)
    assert not raw.normalized
    normalized = run(topo, objs, reg, cfg, l_star=oracle.value)
    raw.normalize(oracle.value)
    assert np.allclose(raw.rel_loss, normalized.rel_loss, rtol=1e-12)
    assert raw.rel_loss[0] == 1.0


def test_divergence_reported_with_iteration():
    from hippo.simulator import DivergenceError
    topo, objs, reg, _ = small_problem()
    bad_hp = HyperParams(mu_z=0.05, mu_theta=0.025, epsilon=0.0)  # far below stability
    cfg = RunConfig(hyperparams=bad_hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=5000, tolerance=0.0, seed=0, divergence_threshold=1e6)
    with pytest.raises(DivergenceError) as info:
        run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value)
    assert info.value.t > 0


def test_cost_model_reference_values():
    assert cost_model("gradient", 60, 6, 3) == 816.0
    newton_first = cost_model("newton", 60, 6, 3, first_call=True)
    assert newton_first - cost_model("gradient", 60, 6, 3) == 2232.0
    newton_later = cost_model("newton", 60, 6, 3, first_call=False)
    assert newton_later - cost_model("gradient", 60, 6, 3) == 72.0
    with pytest.raises(ValueError):
        cost_model("quasi", 60, 6, 3)


def test_run_cost_equals_sum_of_per_step_costs():
    topo, objs, reg, hp = small_problem()
    T = 25
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=T, newton_fraction=0.0, tolerance=0.0, seed=0)
    trace = run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value)
    per_iter = sum(cost_model("gradient", o.n_rows, o.d, topo.degree(i)) for i, o in enumerate(objs))
    assert trace.comp_cost[-1] == pytest.approx(T * per_iter)
    comm_per_iter = sum(o.d * topo.degree(i) for i, o in enumerate(objs))
    assert trace.comm_cost[-1] == pytest.approx(T * comm_per_iter)


def test_newton_hessian_assembly_charged_once():
    topo, objs, reg, hp = small_problem()
    T = 10
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=T, newton_fraction=1.0, tolerance=0.0, seed=0)
    trace = run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value)
    d = objs[0].d
    base = sum(cost_model("gradient", o.n_rows, o.d, topo.degree(i)) for i, o in enumerate(objs))
    expected = T * (base + 3 * d ** 3 / 3.0) + sum(o.n_rows * d ** 2 for o in objs)
    assert trace.comp_cost[-1] == pytest.approx(expected)


def test_communication_cost_is_mode_independent():
    topo, objs, reg, hp = small_problem()
    scheme = ActivationScheme(kind="bernoulli", m=3, probs=(0.7, 0.7, 0.7), seed=8)
    traces = []
    for q in (0.0, 1.0):
        cfg = RunConfig(hyperparams=hp, scheme=scheme, iterations=60, newton_fraction=q,
                        tolerance=0.0, seed=2)
        traces.append(run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value))
    assert np.array_equal(traces[0].comm_cost, traces[1].comm_cost)
    assert np.all(np.diff(traces[0].comm_cost) >= 0)
    assert np.all(np.diff(traces[0].comp_cost) >= 0)


def test_inactive_agents_unchanged():
    topo, objs, reg, hp = small_problem()
    seen = []

    def hook(t, record, x_prev, state, mode):
        inactive = ~record.agents
        seen.append(bool(np.array_equal(state.x[inactive], x_prev[inactive])))

    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="single_uniform", m=3, seed=5),
                    iterations=50, tolerance=0.0, seed=0)
    run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value, iteration_hook=hook)
    assert len(seen) == 50 and all(seen)


def test_full_newton_relative_loss_monotone_after_burn_in():
    topo, objs, reg, hp = small_problem(seed=3)
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=120, newton_fraction=1.0, tolerance=0.0, seed=0)
    trace = run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value)
    tail = trace.rel_loss[5:]
    assert np.all(np.diff(tail) <= 1e-15)


def test_engine_matches_protocol_stepping():
    # the vectorized engine and the per-agent reference ops walk the same path
    topo, objs, reg, hp = small_problem(seed=4)
    scheme = ActivationScheme(kind="bernoulli", m=3, probs=(0.5, 0.8, 0.4), seed=12)
    mode = UpdateMode.from_fraction(0.5, 3, seed=6)
    cfg = RunConfig(hyperparams=hp, scheme=scheme, iterations=150, tolerance=0.0, seed=6,
                    newton_agents=tuple(np.flatnonzero(mode.newton)))
    mirror = NetworkState.zeros(3, 2)
    devs = []

    def hook(t, record, x_prev, state, run_mode):
        step_active(mirror, record.agents, hp, objs, mode, reg, topo)
        devs.append(max(np.max(np.abs(mirror.x - state.x)), np.max(np.abs(mirror.phi - state.phi)),
                        np.max(np.abs(mirror.theta - state.theta)), np.max(np.abs(mirror.lam - state.lam))))

    run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value, iteration_hook=hook)
    assert max(devs) <= 1e-10


def test_trace_cadence_keeps_first_and_last():
    topo, objs, reg, hp = small_problem()
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=47, trace_every=10, tolerance=0.0, seed=0)
    trace = run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value)
    assert trace.t[0] == 0 and trace.t[-1] == 47
    assert list(trace.t[1:-1]) == [10, 20, 30, 40]


def test_run_config_validation():
    topo, objs, reg, hp = small_problem()
    scheme = ActivationScheme(kind="synchronous", m=3)
    with pytest.raises(ConfigurationError):
        RunConfig(hyperparams=hp, scheme=scheme, iterations=-1)
    with pytest.raises(ConfigurationError):
        RunConfig(hyperparams=hp, scheme=scheme, iterations=1, trace_every=0)
    with pytest.raises(ConfigurationError):
        RunConfig(hyperparams=hp, scheme=scheme, iterations=1, policy="snapshot")  # edge dual default
    with pytest.raises(ConfigurationError):
        RunConfig(hyperparams=hp, scheme=scheme, iterations=1, newton_fraction=0.5, newton_agents=(0,))
    with pytest.raises(ConfigurationError):
        cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=4), iterations=1)
        run(topo, objs, reg, cfg)


def test_metadata_echoes_configuration():
    topo, objs, reg, hp = small_problem()
    cfg = RunConfig(hyperparams=hp, scheme=ActivationScheme(kind="synchronous", m=3),
                    iterations=5, newton_fraction=0.5, tolerance=0.0, seed=9)
    trace = run(topo, objs, reg, cfg, l_star=solve_centralized(objs, reg).value)
    md = trace.metadata
    assert md["m"] == 3 and md["seed"] == 9 and md["dual_update"] == "edge"
    assert md["newton_fraction"] == pytest.approx(2 / 3)  # ceil(0.5 * 3) = 2 agents
