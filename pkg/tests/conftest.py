import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit_vectors(rng, n):
    u = rng.standard_normal((n, 3))
    return u / np.linalg.norm(u, axis=1)[:, None]


def run_profile(profile, cfg=None, centerline=None, seed=0, bias=None, preset=None, doppler_sigma=0.0):
    """Simulate an arbitrary profile (noiseless by default) and run the pipeline on it."""
    import math

    from mrio.config import Config
    from mrio.pipeline import run_pipeline
    from mrio.simulator import (NOISELESS, ClutterModel, ConstantBias, RadarSpec, Simulation, TunnelWorld,
                                generate_truth, synth_imu, synth_radar)

    cfg = cfg or Config()
    truth = generate_truth(profile)
    if centerline is None:
        centerline = np.column_stack([truth.x, truth.y])
    world = TunnelWorld(np.asarray(centerline, dtype=float))
    imu = synth_imu(truth, bias or ConstantBias(0.0), preset or NOISELESS, seed)
    rig = [RadarSpec(ext, math.radians(60.0), 10.0) for ext in cfg.extrinsics().values()]
    radar = synth_radar(truth, world, rig, ClutterModel(0.0), doppler_sigma, seed, profile.radar_rate, 24)
    sim = Simulation(truth, imu, radar, world)
    return sim, run_pipeline(sim.events(), cfg)


ACCEPTANCE_LINES = []


def record_criterion(cid, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {title} -- {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
