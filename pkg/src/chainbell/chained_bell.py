"""Chained-Bell correlation quantity I_N, its quantum asymptotics and the minimum over N."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .qudit_core import JointTable, SettingsFamily, born_joint_table, make_maximally_entangled

MODES = ("x-y", "y-x", "y-x-1")


def modular_weights(d: int, mode: str = "x-y") -> np.ndarray:
    """d x d matrix W[x, y] = [x - y], [y - x] or [y - x - 1] (mod d)."""
    x = np.arange(d)[:, None]
    y = np.arange(d)[None, :]
    if mode == "x-y":
        return (x - y) % d
    if mode == "y-x":
        return (y - x) % d
    if mode == "y-x-1":
        return (y - x - 1) % d
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


def modular_expectation(table, mode: str = "x-y", tol: float = 1e-9) -> float:
    """<[.]> = sum_k k P([.] = k) for one setting pair's d x d table.

    ``y-x-1`` is the wraparound term <[Y_N - X_{N+1}]> with X_{N+1} := X_1 + 1.
    """
    table = np.asarray(table, dtype=float)
    if table.ndim != 2 or table.shape[0] != table.shape[1]:
        raise ValueError(f"expected a square table, got shape {table.shape}")
    total = table.sum()
    if abs(total - 1.0) > tol:
        raise ValueError(f"table not normalized (sums to {total!r})")
    return float(np.sum(modular_weights(table.shape[0], mode) * table))


def chain_terms(n: int) -> list[tuple[int, int, str]]:
    """The 2N (A, B, mode) triples of I_N, in chain order.

    Term 2i-1 is <[X_i - Y_i]>, term 2i is <[Y_i - X_{i+1}]>.
    """
    terms = []
    for i in range(1, n + 1):
        terms.append((i, i, "x-y"))
        if i < n:
            terms.append((i + 1, i, "y-x"))
        else:
            terms.append((1, n, "y-x-1"))
    return terms


def chain_weights(d: int, n: int) -> dict[tuple[int, int], np.ndarray]:
    """Per setting-pair weight matrices so that I_N = sum_(A,B) sum_xy W[x,y] P(x,y|A,B).

    For N=1 the single pair (1, 1) carries both terms.
    """
    weights: dict[tuple[int, int], np.ndarray] = {}
    for a, b, mode in chain_terms(n):
        w = modular_weights(d, mode).astype(float)
        weights[(a, b)] = weights.get((a, b), 0.0) + w
    return weights


@dataclass(frozen=True)
class ChainedBellValue:
    dim: int
    n_settings: int
    value: float
    per_term: tuple[float, ...]


def evaluate_IN(joint: JointTable) -> ChainedBellValue:
    d, n = joint.dim, joint.n_settings
    per_term = []
    for a, b, mode in chain_terms(n):
        try:
            table = joint.table(a, b)
        except KeyError as exc:
            raise KeyError(f"missing setting pair ({a}, {b}) required by I_{n}") from exc
        per_term.append(modular_expectation(table, mode))
    return ChainedBellValue(d, n, float(math.fsum(per_term)), tuple(per_term))


def quantum_IN(d: int, n: int) -> float:
    """Exact Born-rule I_N for the maximally entangled state and the chained family."""
    joint = born_joint_table(make_maximally_entangled(d), SettingsFamily(d, n))
    return evaluate_IN(joint).value


def gamma_constant(d: int) -> float:
    """gamma(d) = pi^2/(4 d^2) * sum_{j=1}^{d-1} j / sin^2(pi j / d)."""
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    s = math.fsum(j / math.sin(math.pi * j / d) ** 2 for j in range(1, d))
    return math.pi**2 / (4 * d * d) * s


def asymptotic_IN(d: int, n: int) -> float:
    """Leading-order quantum prediction 2 gamma / N."""
    return 2.0 * gamma_constant(d) / n


@dataclass(frozen=True)
class MinimumScan:
    dim: int | None
    scanned: dict[int, tuple[float, float]]
    argmin_n: int
    i_star: float

    @property
    def stderr(self) -> float:
        return self.scanned[self.argmin_n][1]


def scan_minimum(values: Mapping[int, float | tuple[float, float]], dim: int | None = None) -> MinimumScan:
    """Minimum of I_N over N; ties go to the smaller N."""
    if not values:
        raise ValueError("cannot scan an empty set of I_N values")
    scanned: dict[int, tuple[float, float]] = {}
    for n in sorted(values):
        v = values[n]
        value, err = (v, 0.0) if np.isscalar(v) else v
        scanned[int(n)] = (float(value), float(err))
    best = min(scanned, key=lambda n: (scanned[n][0], n))
    return MinimumScan(dim, scanned, best, scanned[best][0])
