"""Bipartite qudit states, phase-measurement bases and Born-rule joint tables."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

NORM_TOL = 1e-12
CLAMP_TOL = 1e-9

Party = Literal["alice", "bob"]


class DimensionError(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SchmidtState:
    """Pure state sum_j amps[j] |j>|j> with real nonnegative amplitudes."""

    dim: int
    amps: np.ndarray

    def __post_init__(self):
        if self.dim < 2:
            raise DimensionError(f"dimension must be >= 2, got {self.dim}")
        amps = np.asarray(self.amps, dtype=float)
        if amps.shape != (self.dim,):
            raise DimensionError(f"expected {self.dim} amplitudes, got shape {amps.shape}")
        if np.any(amps < 0):
            raise ValueError("Schmidt amplitudes must be nonnegative")
        norm = float(np.sum(amps**2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"amplitudes not normalized: sum of squares = {norm!r}")
        object.__setattr__(self, "amps", _frozen(amps))

    @classmethod
    def from_unnormalized(cls, amps) -> "SchmidtState":
        amps = np.abs(np.asarray(amps, dtype=float))
        return cls(len(amps), amps / np.linalg.norm(amps))


def make_maximally_entangled(d: int) -> SchmidtState:
    if d < 2:
        raise DimensionError(f"dimension must be >= 2, got {d}")
    return SchmidtState(d, np.full(d, 1.0 / np.sqrt(d)))


@dataclass(frozen=True)
class SettingsFamily:
    """The (d, N) chained measurement family with offsets alpha_A=(A-1/2)/N, beta_B=B/N."""

    dim: int
    n_settings: int
    alpha: np.ndarray = field(init=False)
    beta: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.dim < 2:
            raise DimensionError(f"dimension must be >= 2, got {self.dim}")
        if self.n_settings < 1:
            raise ValueError(f"need at least one setting, got {self.n_settings}")
        k = np.arange(1, self.n_settings + 1, dtype=float)
        object.__setattr__(self, "alpha", _frozen((k - 0.5) / self.n_settings))
        object.__setattr__(self, "beta", _frozen(k / self.n_settings))


@dataclass(frozen=True)
class MeasurementVector:
    dim: int
    entries: np.ndarray


def _check_setting(family: SettingsFamily, setting: int, outcome: int) -> None:
    if not 1 <= setting <= family.n_settings:
        raise IndexError(f"setting {setting} outside 1..{family.n_settings}")
    if not 0 <= outcome < family.dim:
        raise IndexError(f"outcome {outcome} outside 0..{family.dim - 1}")


def _basis(party: Party, family: SettingsFamily) -> np.ndarray:
    """All projector vectors for one party, indexed [setting-1, outcome, j]."""
    d = family.dim
    j = np.arange(d)
    outcome = np.arange(d)
    if party == "alice":
        phase = (outcome[None, :, None] - family.alpha[:, None, None]) * j[None, None, :]
        sign = 1.0
    elif party == "bob":
        phase = (outcome[None, :, None] - family.beta[:, None, None]) * j[None, None, :]
        sign = -1.0
    else:
        raise ValueError(f"unknown party {party!r}")
    return np.exp(sign * 2j * np.pi * phase / d) / np.sqrt(d)


def projector_vector(party: Party, family: SettingsFamily, setting: int, outcome: int) -> MeasurementVector:
    _check_setting(family, setting, outcome)
    vec = _basis(party, family)[setting - 1, outcome]
    return MeasurementVector(family.dim, _frozen(vec))


@dataclass(frozen=True)
class JointTable:
    """P(X=x, Y=y | A, B), stored as probs[A-1, B-1, x, y]."""

    dim: int
    n_settings: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        shape = (self.n_settings, self.n_settings, self.dim, self.dim)
        if p.shape != shape:
            raise DimensionError(f"expected table shape {shape}, got {p.shape}")
        if np.any(p < -CLAMP_TOL):
            raise ValueError(f"negative probability {p.min():.3e} beyond clamp tolerance")
        p = np.clip(p, 0.0, None)
        sums = p.sum(axis=(2, 3))
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("each (A, B) table must sum to 1")
        p = p / sums[:, :, None, None]
        object.__setattr__(self, "probs", _frozen(p))

    def table(self, a: int, b: int) -> np.ndarray:
        if not (1 <= a <= self.n_settings and 1 <= b <= self.n_settings):
            raise KeyError(f"no setting pair ({a}, {b})")
        return self.probs[a - 1, b - 1]

    def alice_marginals(self) -> np.ndarray:
        return self.probs.sum(axis=3)

    def bob_marginals(self) -> np.ndarray:
        return self.probs.sum(axis=2)

    def to_dict(self) -> dict:
        tables = [
            {"a": a + 1, "b": b + 1, "table": self.probs[a, b].tolist()}
            for a in range(self.n_settings)
            for b in range(self.n_settings)
        ]
        return {"dim": self.dim, "n_settings": self.n_settings, "tables": tables}

    @classmethod
    def from_dict(cls, data: dict) -> "JointTable":
        d, n = int(data["dim"]), int(data["n_settings"])
        probs = np.full((n, n, d, d), np.nan)
        for entry in data["tables"]:
            probs[entry["a"] - 1, entry["b"] - 1] = entry["table"]
        if np.isnan(probs).any():
            raise ValueError("joint table JSON is missing setting pairs")
        return cls(d, n, probs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def born_joint_table(state: SchmidtState, family: SettingsFamily) -> JointTable:
    if state.dim != family.dim:
        raise DimensionError(f"state dimension {state.dim} != settings dimension {family.dim}")
    alice = _basis("alice", family)
    bob = _basis("bob", family)
    amp = np.einsum("j,axj,byj->abxy", state.amps, alice.conj(), bob.conj())
    probs = np.abs(amp) ** 2
    # Born rule gives exact normalization up to roundoff; the JointTable constructor
    # validates and renormalizes.
    return JointTable(family.dim, family.n_settings, probs)
