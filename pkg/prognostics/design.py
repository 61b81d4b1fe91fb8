"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import itertools

import numpy as np

DESIGNS = ["uniform", "orthogonal_array"]


def _batch_rng(seed, batch_index):
    return np.random.default_rng([seed, batch_index])


def _is_prime(q):
    return q >= 2 and all(q % d for d in range(2, int(q**0.5) + 1))


def rao_hamming_array(q, m):
    """
    Strength-2 orthogonal array OA(q^m, (q^m - 1)/(q - 1), q, 2) over GF(q)
    for prime q. Rows enumerate GF(q)^m; each column is the inner product
    with a projective point (first non-zero entry equal to 1).

    Returns:
        np.ndarray of levels in {0..q-1}, shape (q^m, (q^m - 1)/(q - 1)).
    """
    if not _is_prime(q):
        raise ValueError(f"Invalid q {q}, orthogonal arrays need a prime level count.")
    if m < 2:
        raise ValueError(f"Invalid m {m}, must be at least 2.")
    rows = np.array(list(itertools.product(range(q), repeat=m)), dtype=np.int64)
    columns = [
        c
        for c in itertools.product(range(q), repeat=m)
        if any(c) and c[next(i for i, v in enumerate(c) if v)] == 1
    ]
    generators = np.array(columns, dtype=np.int64).T
    return (rows @ generators) % q


def randomized_orthogonal_array(num_points, p, q, rng):
    """
    Stacks independently randomized strength-2 orthogonal arrays until
    `num_points` rows are filled. Each block picks p columns at random,
    permutes the levels of every column and jitters uniformly within the
    selected cell, so every coordinate lands in (level/q, (level+1)/q].
    """
    m = 2
    while (q**m - 1) // (q - 1) < p:
        m += 1
    base = rao_hamming_array(q, m)
    blocks = []
    filled = 0
    while filled < num_points:
        cols = rng.choice(base.shape[1], size=p, replace=False)
        block = base[:, cols].copy()
        for j in range(p):
            block[:, j] = rng.permutation(q)[block[:, j]]
        jitter = rng.random(block.shape)
        blocks.append((block + 1.0 - jitter) / q)
        filled += len(block)
    return np.concatenate(blocks)[:num_points]


def batch_points(batch_index, size, p, seed, design="uniform", q=3):
    """
    Points of one design batch. Batches draw from independent streams
    derived from (seed, batch_index), so any batch can be regenerated alone.
    """
    rng = _batch_rng(seed, batch_index)
    if design == "uniform":
        # U(0, 1]
        return 1.0 - rng.random((size, p))
    elif design == "orthogonal_array":
        return randomized_orthogonal_array(size, p, q, rng)
    else:
        raise ValueError(f"Unknown design {design}, must be in [{', '.join(DESIGNS)}].")


def design_batches(num_points, p, seed, batch_size, design="uniform", q=3):
    """
    Yields (start_index, points) for consecutive batches covering
    `num_points` design points.
    """
    if num_points < 1:
        raise ValueError(f"Invalid number of points {num_points}, must be at least 1.")
    for batch_index, start in enumerate(range(0, num_points, batch_size)):
        size = min(batch_size, num_points - start)
        yield start, batch_points(batch_index, size, p, seed, design, q)


def generate_design(num_points, p, seed, batch_size=3**9, design="uniform", q=3):
    return np.concatenate(
        [pts for _, pts in design_batches(num_points, p, seed, batch_size, design, q)]
    )
