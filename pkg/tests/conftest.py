"""Shared fixtures: the benchmark scenario and cached pipeline runs."""
import os

import numpy as np
import pytest

import sourcescope as ss

SCENARIO_FILE = os.path.join(
    os.path.dirname(__file__), os.pardir, "scenarios", "paper_fig1.scenario")


@pytest.fixture(scope="session")
def bench_scn():
    """The committed benchmark scenario (three catalysts, unit generator)."""
    return ss.build_scenario(ss.paper_scenario())


@pytest.fixture(scope="session")
def ideal_scn():
    """Benchmark scenario with no background drift and no noise."""
    return ss.build_scenario(
        ss.paper_scenario(L=0.0, sigma=0.0, noise_mode="zero"))


@pytest.fixture(scope="session")
def bench_run(bench_scn):
    """One full pipeline run of the benchmark, both algorithms."""
    return ss.run_scenario(bench_scn)


@pytest.fixture(scope="session")
def ideal_run(ideal_scn):
    return ss.run_scenario(ideal_scn)


@pytest.fixture(scope="session")
def noiseless_streams(ideal_scn):
    """Sampled measurement streams of the noiseless benchmark."""
    from sourcescope.dynamics import Trajectory
    from sourcescope.sampling import Sampler, SampledStreams

    traj = Trajectory(ideal_scn.model, ideal_scn.generator,
                      ideal_scn.cfg.horizon)
    sampler = Sampler(traj, ideal_scn.sensors, ideal_scn.cfg)
    return SampledStreams(sampler)


def unit_generator(nodes=ss.DEFAULT_NODES):
    return ss.MultiplicationGenerator(
        ss.GridFunction(np.ones(nodes)))
