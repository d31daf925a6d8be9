"""Independent reference computations used by the tests.

These deliberately avoid the library's own code paths wherever they act as
oracles: the Bayesian density comes from the literal product formula, the
cluster state from its displayed four-term expansion, and the scalar agent
loop drives the public single-step operations one round at a time.
"""

import math

import numpy as np

from fieldadapt.pscore import (TRIGGER_PERCEPT, apply_update, mix_seed,
                               select_action, single_percept_network)
from fieldadapt.quantum import sample_outcome


def product_posterior_density(record, grid):
    """Literal Bayesian posterior: product of (1 + r cos(phi - alpha)) / 2
    over the record, renormalized on the grid."""
    grid = np.asarray(grid, dtype=float)
    values = np.full(grid.shape, 1.0 / (2.0 * math.pi))
    for alpha, bit in record:
        r = 2 * bit - 1
        values = values * (1.0 + r * np.cos(grid - alpha)) / 2.0
    step = grid[1] - grid[0]
    return values / (values.sum() * step)


def displayed_ring_cluster_state():
    """The four-term expansion (|0+0+> + |0-1-> + |1-0-> + |1+1+>)/2,
    assembled by tensor products; qubit 1 is the most significant bit."""
    zero = np.array([1.0, 0.0], dtype=complex)
    one = np.array([0.0, 1.0], dtype=complex)
    plus = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    minus = np.array([1.0, -1.0], dtype=complex) / math.sqrt(2.0)

    def kron4(a, b, c, d):
        return np.kron(np.kron(np.kron(a, b), c), d)

    return 0.5 * (kron4(zero, plus, zero, plus)
                  + kron4(zero, minus, one, minus)
                  + kron4(one, minus, zero, minus)
                  + kron4(one, plus, one, plus))


def run_scalar_agent(phi_by_round, params, seed, agent_index,
                     actions=None, record_outcomes=False):
    """One agent stepped through the public scalar operations, consuming its
    stream exactly as the vectorized engines claim to."""
    rng = np.random.default_rng(mix_seed(seed, agent_index))
    net = (single_percept_network() if actions is None
           else single_percept_network(actions))
    outcomes = []
    for phi in phi_by_round:
        idx = select_action(net, TRIGGER_PERCEPT, rng)
        bit = sample_outcome(phi, net.actions[idx], rng)
        apply_update(net, TRIGGER_PERCEPT, idx, params.reward_scale * bit,
                     params, scope="all-edges")
        if record_outcomes:
            outcomes.append(bit)
    return net, outcomes
