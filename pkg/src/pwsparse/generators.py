"""Synthetic dictionaries and piecewise sparse signals.

Every generator is a pure function of its parameters and ``seed``.  A seed
may be an int or a ``numpy.random.Generator``; pass a Generator to draw
several objects from one stream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .conditions import SparsityPattern, SupportPartition
from .dictionary import BlockPartition, Dictionary
from .errors import InputError


def derive_seed(master: int, *keys: int) -> int:
    """Independent 64-bit seed for stream ``keys`` under ``master``."""
    ss = np.random.SeedSequence([int(master), *(int(k) for k in keys)])
    return int(ss.generate_state(1, np.uint64)[0])


def random_orthonormal_basis(m: int, seed=None) -> np.ndarray:
    """Haar-distributed ``m x m`` orthogonal matrix (QR of a Gaussian matrix, sign-fixed)."""
    if m < 1:
        raise InputError(f"m must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((m, m)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def union_orthogonal(m: int, n_blocks: int, seed=None) -> Dictionary:
    if m < 2 or n_blocks < 2:
        raise InputError(f"need m >= 2 and N >= 2, got m={m}, N={n_blocks}")
    rng = np.random.default_rng(seed)
    blocks = [random_orthonormal_basis(m, rng) for _ in range(n_blocks)]
    return Dictionary(np.hstack(blocks), BlockPartition((m,) * n_blocks))


def identity_hadamard(m: int) -> Dictionary:
    """Identity next to the Sylvester Hadamard matrix scaled by ``m^-1/2``."""
    if m < 2 or m & (m - 1):
        raise InputError(f"m must be a power of two >= 2, got {m}")
    h = scipy.linalg.hadamard(m).astype(np.float64) / np.sqrt(m)
    return Dictionary(np.hstack([np.eye(m), h]), BlockPartition((m, m)))


def union_general(m: int, n_blocks: int, mixing: float, seed=None, widths=None) -> Dictionary:
    """Blocks ``(1 - mixing) Q_i + mixing G_i`` with unit-normalized columns.

    ``Q_i`` is a random orthonormal basis and ``G_i`` a standard Gaussian
    matrix.  ``mixing`` only steers the within-block coherence; measure it
    afterwards.  ``widths`` keeps the first ``widths[i]`` columns of block
    ``i`` (default: square blocks).
    """
    if m < 2 or n_blocks < 2:
        raise InputError(f"need m >= 2 and N >= 2, got m={m}, N={n_blocks}")
    if not 0.0 <= mixing <= 1.0:
        raise InputError(f"mixing must lie in [0, 1], got {mixing}")
    if widths is None:
        widths = [m] * n_blocks
    widths = list(widths)
    if len(widths) != n_blocks or any(not 1 <= w <= m for w in widths):
        raise InputError(f"widths must be {n_blocks} values in [1, {m}], got {widths}")
    rng = np.random.default_rng(seed)
    blocks = []
    for w in widths:
        q = random_orthonormal_basis(m, rng)
        g = rng.standard_normal((m, m))
        blend = ((1.0 - mixing) * q + mixing * g)[:, :w]
        blocks.append(blend / np.linalg.norm(blend, axis=0))
    return Dictionary(np.hstack(blocks), BlockPartition(tuple(widths)))


@dataclass(frozen=True)
class SignalSpec:
    """Per-block sparsities plus amplitude law.

    Nonzero magnitudes are uniform on ``[lo, hi]`` unless ``fixed`` is set;
    signs are independent and uniform.
    """

    partition: BlockPartition
    sparsities: SparsityPattern
    lo: float = 0.5
    hi: float = 1.5
    fixed: float | None = None
    seed: int | None = 0

    def __post_init__(self):
        if not isinstance(self.sparsities, SparsityPattern):
            object.__setattr__(self, "sparsities", SparsityPattern(tuple(self.sparsities)))
        self.sparsities.check_against(self.partition)
        if self.fixed is None and not 0 < self.lo <= self.hi:
            raise InputError(f"need 0 < lo <= hi, got lo={self.lo}, hi={self.hi}")
        if self.fixed is not None and self.fixed <= 0:
            raise InputError(f"fixed amplitude must be > 0, got {self.fixed}")


def piecewise_sparse_signal(spec: SignalSpec, seed=None) -> tuple[np.ndarray, SupportPartition]:
    """Draw ``x`` with exactly ``s_i`` nonzeros in block ``i``.

    ``seed`` overrides ``spec.seed`` (handy for passing a shared Generator).
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    part = spec.partition
    x = np.zeros(part.n)
    supports = []
    for off, w, s in zip(part.offsets, part.widths, spec.sparsities.s):
        local = np.sort(rng.choice(w, size=s, replace=False)) if s else np.zeros(0, dtype=int)
        if spec.fixed is not None:
            mags = np.full(s, float(spec.fixed))
        else:
            mags = rng.uniform(spec.lo, spec.hi, size=s)
        signs = rng.choice([-1.0, 1.0], size=s)
        x[off + local] = signs * mags
        supports.append(tuple(int(k) for k in local))
    return x, SupportPartition(part, tuple(supports))
