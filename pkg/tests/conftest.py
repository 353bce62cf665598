"""Shared fixtures: the built-in benchmark, oracle solution, full scenario
runs (executed once per session and reused), and a small seeded random plant.
"""

import time

import numpy as np
import pytest

import camlqr


@pytest.fixture(scope="session")
def benchmark():
    """(model, cost, x0) for the built-in six-agent plant."""
    return camlqr.multi_agent_benchmark()


@pytest.fixture(scope="session")
def oracle_K(benchmark):
    model, cost, _ = benchmark
    return camlqr.oracle_gain(model, cost)


@pytest.fixture(scope="session")
def scenario_root(tmp_path_factory):
    return tmp_path_factory.mktemp("scenarios")


@pytest.fixture(scope="session")
def nominal_run(scenario_root):
    """Timed full run of the built-in nominal scenario (with figures)."""
    config = camlqr.builtin_config(
        "nominal_attack", out_dir=str(scenario_root / "nominal_attack"))
    start = time.perf_counter()
    report = camlqr.run_scenario(config)
    return report, time.perf_counter() - start


@pytest.fixture(scope="session")
def arrl_run(scenario_root):
    """Timed full run of the built-in camouflaged scenario."""
    config = camlqr.builtin_config(
        "arrl_attack", out_dir=str(scenario_root / "arrl_attack"))
    start = time.perf_counter()
    report = camlqr.run_scenario(config)
    return report, time.perf_counter() - start


@pytest.fixture(scope="session")
def gentle_logs(benchmark):
    """Exploration logs on a low-frequency band where one-step sampled
    identification is in its asymptotic accuracy regime: one plain, one
    camouflaged, same seed and duration."""
    model, _, x0 = benchmark
    signal = camlqr.make_sum_of_sinusoids(seed=11, m=6, freq_range=(0.1, 3.0))
    cam = camlqr.benchmark_camouflage()
    plain = camlqr.simulate(model, x0, 2.0, 0.005, exploration=signal)
    camo = camlqr.simulate(model, x0, 2.0, 0.005, exploration=signal,
                           camouflage=cam)
    return plain, camo


@pytest.fixture(scope="session")
def small_plant():
    """Seeded random stable 3-state, 2-input plant with a camouflage map."""
    rng = np.random.default_rng(42)
    A = rng.uniform(-1.0, 1.0, (3, 3))
    A = A - (camlqr.spectral_abscissa(A) + 1.0) * np.eye(3)
    B = rng.uniform(-1.0, 1.0, (3, 2))
    model = camlqr.LTIModel(A=A, B=B)
    cost = camlqr.CostSpec(Q=np.eye(3), R=np.eye(2))
    x0 = rng.uniform(0.5, 1.0, 3)
    C = rng.uniform(-1.0, 1.0, (2, 3))

    def f(t):
        return 0.3 * (np.sin(t) + np.cos(t) + 0.02)

    gamma = 0.3 * (np.sqrt(2.0) + 0.02) * np.linalg.svd(C, compute_uv=False)[0]
    cam = camlqr.CamouflageMap(f=f, C=C, gamma=gamma)
    return model, cost, x0, cam


@pytest.fixture(scope="session")
def small_plant_gains(small_plant):
    """Nominal, coupling-aware, and model-based gains on the small plant."""
    model, cost, x0, cam = small_plant
    signal = camlqr.make_sum_of_sinusoids(seed=5, m=2, freq_range=(0.5, 50.0))
    plain = camlqr.simulate(model, x0, 2.0, 0.01, exploration=signal)
    camo = camlqr.simulate(model, x0, 2.0, 0.01, exploration=signal,
                           camouflage=cam)
    D_plain = camlqr.build_data_matrices(plain, T=0.01)
    D_cam = camlqr.build_data_matrices(camo, T=0.01, with_psi=True)
    K_nominal = camlqr.nominal_rl(D_plain, cost).K_final
    K_arrl = camlqr.arrl(D_cam, cost).K_final
    K_star = camlqr.oracle_gain(model, cost)
    return K_nominal, K_arrl, K_star
