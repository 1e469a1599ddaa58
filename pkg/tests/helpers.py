import numpy as np

from svtkit.sampled import IndexSet, SampledMatrix


def random_pattern(rng, n1, n2, density):
    m = max(1, int(round(density * n1 * n2)))
    return IndexSet.from_linear(n1, n2, rng.choice(n1 * n2, size=m, replace=False))


def random_sampled(rng, n1, n2, density):
    omega = random_pattern(rng, n1, n2, density)
    return SampledMatrix(omega, rng.standard_normal(len(omega)))


def projector(basis):
    return basis @ basis.T
