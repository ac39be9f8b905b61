"""Shared helpers for the test suite: random operators and independent oracles."""

import numpy as np


def rng(seed=0):
    return np.random.default_rng(seed)


def rand_complex(r, *shape):
    return r.normal(size=shape) + 1j * r.normal(size=shape)


def rand_unit(r, d):
    v = rand_complex(r, d)
    return v / np.linalg.norm(v)


def rand_hermitian(r, d):
    A = rand_complex(r, d, d)
    return (A + A.conj().T) / 2


def rand_psd(r, d, rank=None):
    k = rank or d
    A = rand_complex(r, d, k)
    return A @ A.conj().T


def loop_partial_transpose(Z, dK, dH):
    """Independent loop implementation of the second-factor transpose."""
    out = np.zeros_like(np.asarray(Z, dtype=complex))
    for i in range(dK):
        for j in range(dK):
            blk = Z[i * dH:(i + 1) * dH, j * dH:(j + 1) * dH]
            out[i * dH:(i + 1) * dH, j * dH:(j + 1) * dH] = blk.T
    return out


def brute_rank(vectors, rtol=1e-8):
    s = np.linalg.svd(np.array(vectors), compute_uv=False)
    return int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0
