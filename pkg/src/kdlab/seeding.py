"""Hierarchical random streams.

stream(master, experiment, eps_index, trajectory, purpose) hashes the five
integers with numpy's SeedSequence (spawn_key = the last four), so every
(experiment, eps, trajectory, purpose) cell gets an independent generator that
does not depend on how trajectories are batched.
"""

import numpy as np

EXPERIMENTS = {
    "simulate-kinetic": 1, "simulate-limit": 2, "estimate-kernel": 3, "stopping-stats": 4,
    "martingale-check": 5, "generator-consistency": 6, "deterministic-limit": 7,
    "weak-convergence": 8, "zeta-wiener": 9, "tightness": 10, "sobolev-diagnostic": 11,
    "unit": 99,
}

PURPOSES = {"kinetic": 1, "limit": 2, "kernel": 3, "states": 4, "aux": 5}


def seed_sequence(master, experiment, eps_index=0, trajectory=0, purpose="kinetic"):
    exp = EXPERIMENTS[experiment] if isinstance(experiment, str) else int(experiment)
    pur = PURPOSES[purpose] if isinstance(purpose, str) else int(purpose)
    return np.random.SeedSequence(entropy=int(master), spawn_key=(exp, int(eps_index), int(trajectory), pur))


def stream(master, experiment, eps_index=0, trajectory=0, purpose="kinetic"):
    return np.random.default_rng(seed_sequence(master, experiment, eps_index, trajectory, purpose))


def streams(master, experiment, eps_index, n, purpose="kinetic"):
    return [stream(master, experiment, eps_index, i, purpose) for i in range(n)]


def seed_labels(master, experiment, eps_index, n, purpose="kinetic"):
    return [(int(master), experiment, int(eps_index), i, purpose) for i in range(n)]
