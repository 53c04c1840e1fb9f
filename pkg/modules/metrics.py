"""
Mission metrics: information gain and accuracy score on the L marginals,
plus B / rock entropies that are reported but never used as reward.
"""

import sys
import os

import numpy as np
from scipy import special

sys.path.append(os.path.dirname(os.path.dirname(__file__)))
from modules.bn_core import LN2, BeliefState, joint_l_entropy
from modules.errors import ConfigError
from modules.world import WorldState


def information_gain(initial: BeliefState, final: BeliefState) -> float:
    """Joint L entropy removed between two beliefs, in bits."""
    if initial.grid.l_shape != final.grid.l_shape:
        raise ConfigError(f"belief grids differ: {initial.grid.l_shape} vs {final.grid.l_shape}")
    return joint_l_entropy(initial) - joint_l_entropy(final)


def accuracy_score(belief: BeliefState, truth: WorldState) -> float:
    """
    Sum over cells of the belief probability on the true location class.

    A cell believed [0.1, 0.2, 0.7] whose true class is 1 contributes 0.2.
    """
    if belief.l_belief.shape[:2] != truth.l_truth.shape:
        raise ConfigError(f"belief grid {belief.l_belief.shape[:2]} != truth grid {truth.l_truth.shape}")
    picked = np.take_along_axis(belief.l_belief, truth.l_truth[..., None], axis=-1)
    return float(picked.sum())


def uniform_accuracy(n_cells: int, n_classes: int) -> float:
    return n_cells / n_classes


def b_entropy(belief: BeliefState) -> float:
    """Sum of per-cell B marginal entropies, in bits."""
    return float(special.entr(belief.b_belief).sum() / LN2)


def rock_entropy(belief: BeliefState) -> float:
    """Sum of R marginal entropies over detected rocks, in bits."""
    if not belief.rock_beliefs:
        return 0.0
    probs = np.stack([d.probs for d in belief.rock_beliefs.values()])
    return float(special.entr(probs).sum() / LN2)
