# Synthetic zero-height files for exercising the zeros pipeline without real data.
# Points are generated at unit density, then scaled to the mean zero density at the
# base height so that unfolding returns them to unit density.

import argparse

import numpy as np
from scipy.stats import unitary_group

from src.constants import FORMAT_BASE_OFFSET, FORMAT_PLAIN
from src.data_management import DataManagement
from src.zeros import mean_density

KINDS = ("poisson", "lattice", "cue")


def poisson_points(count, rng):
    # Exponential gaps give a unit-rate Poisson process
    return np.cumsum(rng.exponential(1.0, size=count))


def lattice_points(count, rng, jitter=0.0):
    points = np.arange(1, count + 1, dtype=float)
    if jitter > 0:
        points += rng.uniform(-jitter, jitter, size=count)
    return np.sort(points)


def cue_points(count, N, rng):
    # Independent N x N Haar unitaries, eigenphases scaled to unit density and laid end to end
    chunks = []
    origin = 0.0
    while sum(len(c) for c in chunks) < count:
        matrix = unitary_group.rvs(N, random_state=rng)
        phases = np.sort(np.mod(np.angle(np.linalg.eigvals(matrix)), 2 * np.pi))
        chunks.append(origin + phases * N / (2 * np.pi))
        origin += N
    return np.concatenate(chunks)[:count]


def generate_offsets(kind, count, base_height, N=50, seed=None):
    """Return offsets above base_height whose unfolded spacings follow the chosen law"""
    rng = np.random.default_rng(seed)
    if kind == "poisson":
        points = poisson_points(count, rng)
    elif kind == "lattice":
        points = lattice_points(count, rng)
    elif kind == "cue":
        points = cue_points(count, N, rng)
    else:
        raise ValueError(f"unknown kind {kind!r}, expected one of {KINDS}")
    return points / mean_density(base_height)


def build_parser():
    parser = argparse.ArgumentParser(description="Generate a synthetic zero-height file")
    parser.add_argument('--kind', choices=KINDS, default="cue")
    parser.add_argument('--count', type=int, default=10000)
    parser.add_argument('--N', type=int, default=50, help="matrix size for the cue kind")
    parser.add_argument('--base-height', type=int, default=10**12)
    parser.add_argument('--format', choices=[FORMAT_PLAIN, FORMAT_BASE_OFFSET], default=FORMAT_BASE_OFFSET)
    parser.add_argument('--seed', type=int, default=None)
    parser.add_argument('--out', default="zeros_sample.txt")
    return parser


if __name__ == "__main__":
    args = build_parser().parse_args()
    offsets = generate_offsets(args.kind, args.count, args.base_height, args.N, args.seed)
    DataManagement().write_zeros(args.out, args.base_height, offsets, args.format)
    print(f"Generated {args.out} with {len(offsets)} {args.kind} heights above {args.base_height}.")
