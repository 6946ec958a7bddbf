"""Lower bounds that Bell-type and Leggett-type hidden-variable models impose on I_N."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .chained_bell import evaluate_IN
from .qudit_core import JointTable

ENUMERATION_GUARD = 10**7
_CHUNK = 1 << 18

LeggettModel = Literal["fixed-in-plane", "two-orthogonal-planes", "uniform-sphere"]


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class BoundReport:
    model: str
    dim: int
    n_settings: int | None
    bound: float
    kind: str

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "dim": self.dim,
            "n_settings": self.n_settings,
            "bound": self.bound,
            "kind": self.kind,
        }


@dataclass(frozen=True)
class DeterministicStrategy:
    """Local deterministic assignment X = f(A), Y = g(B) for one value of the hidden variables."""

    dim: int
    n_settings: int
    alice_map: tuple[int, ...]
    bob_map: tuple[int, ...]

    def __post_init__(self):
        for name, m in (("alice_map", self.alice_map), ("bob_map", self.bob_map)):
            if len(m) != self.n_settings:
                raise ValueError(f"{name} needs {self.n_settings} entries, got {len(m)}")
            if any(not 0 <= int(v) < self.dim for v in m):
                raise ValueError(f"{name} entries must lie in 0..{self.dim - 1}")
        object.__setattr__(self, "alice_map", tuple(int(v) for v in self.alice_map))
        object.__setattr__(self, "bob_map", tuple(int(v) for v in self.bob_map))

    def joint_table(self) -> JointTable:
        d, n = self.dim, self.n_settings
        probs = np.zeros((n, n, d, d))
        for a in range(n):
            for b in range(n):
                probs[a, b, self.alice_map[a], self.bob_map[b]] = 1.0
        return JointTable(d, n, probs)

    def value(self) -> float:
        return evaluate_IN(self.joint_table()).value


def strategy_from_index(d: int, n: int, index: int) -> DeterministicStrategy:
    """Strategy number ``index`` in lexicographic order of (f(1..N), g(1..N))."""
    digits = []
    for _ in range(2 * n):
        index, r = divmod(index, d)
        digits.append(r)
    digits.reverse()
    return DeterministicStrategy(d, n, tuple(digits[:n]), tuple(digits[n:]))


def bell_bound_analytic(d: int) -> BoundReport:
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    return BoundReport("Bell", d, None, 8.0 * (d - 1) / d**3, "analytic")


def _chunk_values(d: int, n: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    digits = np.empty((2 * n, idx.size), dtype=np.int64)
    for k in range(2 * n - 1, -1, -1):
        idx, digits[k] = np.divmod(idx, d)
    f, g = digits[:n], digits[n:]
    total = np.zeros(digits.shape[1], dtype=np.int64)
    for i in range(n):
        total += (f[i] - g[i]) % d
        nxt = f[i + 1] if i + 1 < n else f[0] + 1
        total += (g[i] - nxt) % d
    return total


def bell_bound_bruteforce(d: int, n: int) -> BoundReport:
    """Minimum of I_N over all d^(2N) local deterministic strategies."""
    count = d ** (2 * n)
    if count > ENUMERATION_GUARD:
        raise EnumerationTooLarge(f"{d}^(2*{n}) = {count} strategies exceeds guard {ENUMERATION_GUARD}")
    best = None
    for start in range(0, count, _CHUNK):
        m = int(_chunk_values(d, n, start, min(count, start + _CHUNK)).min())
        best = m if best is None else min(best, m)
    return BoundReport("Bell", d, n, float(best), "brute-force")


def enumerate_strategy_values(d: int, n: int) -> np.ndarray:
    """I_N of every strategy, in lexicographic index order."""
    count = d ** (2 * n)
    if count > ENUMERATION_GUARD:
        raise EnumerationTooLarge(f"{count} strategies exceeds guard {ENUMERATION_GUARD}")
    return _chunk_values(d, n, 0, count).astype(float)


def mixture_table(strategies: Sequence[tuple[DeterministicStrategy, float]]) -> JointTable:
    if not strategies:
        raise ValueError("empty mixture")
    weights = np.array([w for _, w in strategies], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("mixture weights must be nonnegative and sum to 1")
    first = strategies[0][0]
    probs = sum(w * s.joint_table().probs for s, w in strategies)
    return JointTable(first.dim, first.n_settings, probs)


def mixture_IN(strategies: Sequence[tuple[DeterministicStrategy, float]]) -> float:
    """I_N of a convex mixture of deterministic strategies.

    Computed on the mixed table and cross-checked against the weighted sum of
    per-strategy values (I_N is linear in the distribution).
    """
    mixed = evaluate_IN(mixture_table(strategies)).value
    weighted = math.fsum(w * s.value() for s, w in strategies)
    if abs(mixed - weighted) > 1e-12:
        raise ArithmeticError(f"mixture I_N {mixed!r} != weighted sum {weighted!r}")
    return mixed


@dataclass(frozen=True)
class LeggettConfig:
    n_settings: int
    u_model: LeggettModel = "uniform-sphere"
    dim: int = 2

    def __post_init__(self):
        if self.dim != 2:
            raise ValueError("Leggett models are defined for two-dimensional systems only")
        if self.n_settings < 1:
            raise ValueError("need at least one setting")
        if self.u_model not in ("fixed-in-plane", "two-orthogonal-planes", "uniform-sphere"):
            raise ValueError(f"unknown u_model {self.u_model!r}")


def leggett_bound(cfg: LeggettConfig) -> BoundReport:
    n = cfg.n_settings
    if cfg.u_model == "fixed-in-plane":
        bound = math.cos(math.pi / (2 * n))
    elif cfg.u_model == "two-orthogonal-planes":
        bound = math.cos(math.pi / (2 * n)) / math.sqrt(2.0)
    else:
        bound = 0.5
    return BoundReport(f"Leggett/{cfg.u_model}", 2, n, bound, "analytic")


def sample_sphere(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform unit vectors: uniform azimuth and uniform cos(polar)."""
    cos_t = rng.uniform(-1.0, 1.0, size)
    phi = rng.uniform(0.0, 2 * np.pi, size)
    sin_t = np.sqrt(1.0 - cos_t**2)
    return np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=1)


def malus_marginal(a, u) -> np.ndarray:
    """P(X=x | a, u) = (1 + (-1)^x a.u) / 2 for x = 0, 1; one row per u."""
    dot = np.atleast_2d(u) @ np.asarray(a, dtype=float)
    return 0.5 * np.stack([1 + dot, 1 - dot], axis=-1)


def leggett_delta_oracle(samples: int, seed: int, a=(0.0, 0.0, 1.0), u=None) -> float:
    """Monte Carlo estimate of <|a.u|> over the hidden pure-state vector u.

    The estimate goes through the Malus marginals: Delta(P_X|a,u, uniform) summed
    over outcomes and divided by d=2 equals |a.u|/2, so <|a.u|> = 2 <Delta>.
    ``u`` pins the hidden vector instead of sampling it.
    """
    if samples < 10**4:
        raise ValueError("need at least 10^4 samples")
    a = np.asarray(a, dtype=float)
    a = a / np.linalg.norm(a)
    if u is None:
        vecs = sample_sphere(np.random.default_rng(seed), samples)
    else:
        u = np.asarray(u, dtype=float)
        vecs = np.broadcast_to(u / np.linalg.norm(u), (samples, 3))
    marg = malus_marginal(a, vecs)
    delta = np.abs(marg - 0.5).sum(axis=1) / 2
    return float(2 * delta.mean())


def violation_margin(i_star: float, stderr: float, bound: BoundReport | float) -> float:
    """Number of standard deviations by which i_star lies below the bound."""
    if stderr <= 0:
        raise ValueError("stderr must be positive")
    b = bound.bound if isinstance(bound, BoundReport) else float(bound)
    return (b - i_star) / stderr
