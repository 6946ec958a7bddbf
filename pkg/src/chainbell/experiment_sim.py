"""Simulated OAM coincidence experiment: spectrum, concentration, noise, counts and estimation.

Also the count-file readers and writers used to push real data through the
same estimation pipeline.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .chained_bell import MinimumScan, chain_weights, evaluate_IN, scan_minimum
from .qudit_core import JointTable, SchmidtState, SettingsFamily, born_joint_table, make_maximally_entangled

# computational-basis OAM modes used per dimension
DEFAULT_MODES = {
    2: (-2, 2),
    3: (-3, 0, 3),
    4: (-4, -1, 1, 4),
    5: (-2, -1, 0, 1, 2),
    6: (-3, -2, -1, 1, 2, 3),
}


class CountFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SpiralSpectrum:
    half_width: int
    shape: Literal["exponential", "lorentzian"] = "exponential"
    decay: float = 3.0

    def __post_init__(self):
        if self.half_width < 0:
            raise ValueError("half_width must be >= 0")
        if not self.decay > 0:
            raise ValueError("decay must be positive")
        if self.shape not in ("exponential", "lorentzian"):
            raise ValueError(f"unknown spectrum shape {self.shape!r}")

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)


def spectrum_amplitudes(spec: SpiralSpectrum) -> dict[int, float]:
    """Normalized c_l for l in [-L, L]."""
    ell = spec.modes.astype(float)
    if math.isinf(spec.decay):
        raw = np.ones_like(ell)
    elif spec.shape == "exponential":
        raw = np.exp(-np.abs(ell) / spec.decay)
    else:
        raw = 1.0 / (1.0 + (ell / spec.decay) ** 2)
    raw = raw / np.sqrt(np.sum(raw**2))
    return {int(l): float(c) for l, c in zip(spec.modes, raw)}


@dataclass(frozen=True)
class SubspaceSelection:
    modes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(int(m) for m in self.modes))
        if len(set(self.modes)) != len(self.modes):
            raise ValueError(f"modes must be distinct: {self.modes}")
        if len(self.modes) < 2:
            raise ValueError("need at least two modes")

    @property
    def dim(self) -> int:
        return len(self.modes)

    @classmethod
    def default_for(cls, d: int) -> "SubspaceSelection":
        if d in DEFAULT_MODES:
            return cls(DEFAULT_MODES[d])
        half = d // 2
        modes = [m for m in range(-half, half + 1) if d % 2 or m != 0]
        return cls(tuple(modes[:d]))


def project_spectrum(spec: SpiralSpectrum, subspace: SubspaceSelection) -> SchmidtState:
    """Restrict |Psi> = sum c_l |l>|-l> to the selected modes and renormalize."""
    amps = spectrum_amplitudes(spec)
    missing = [m for m in subspace.modes if m not in amps]
    if missing:
        raise ValueError(f"modes {missing} lie outside the spectrum half-width {spec.half_width}")
    return SchmidtState.from_unnormalized([amps[m] for m in subspace.modes])


def procrustean_concentrate(state: SchmidtState) -> tuple[SchmidtState, float]:
    """Local filtering down to the smallest amplitude.

    Mode j passes with amplitude ratio min/lambda_j, so the success probability
    is sum_j min^2 = d * min^2 and the output is maximally entangled.
    """
    lam = state.amps
    if np.any(lam <= 0):
        raise ValueError("cannot concentrate: a selected mode has zero amplitude")
    low = float(lam.min())
    if np.all(lam == low):
        return state, 1.0
    eff = state.dim * low * low
    return SchmidtState(state.dim, np.full(state.dim, 1.0 / math.sqrt(state.dim))), eff


@dataclass(frozen=True)
class NoiseModel:
    """Isotropic white noise, per-party detection crosstalk and count rates.

    rate_scale is the expected number of coincidences per setting pair at unit
    filter efficiency; dark_rate is the accidental coincidences per setting pair.
    """

    visibility: float = 1.0
    crosstalk: np.ndarray | None = None
    rate_scale: float = 1e5
    dark_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        if self.rate_scale < 0 or self.dark_rate < 0:
            raise ValueError("rates must be nonnegative")
        if self.crosstalk is not None:
            k = np.array(self.crosstalk, dtype=float)
            if k.ndim != 2 or k.shape[0] != k.shape[1]:
                raise ValueError("crosstalk must be a square matrix")
            if np.any(k < 0) or np.any(np.abs(k.sum(axis=1) - 1) > 1e-12):
                raise ValueError("crosstalk rows must be probability vectors")
            k.setflags(write=False)
            object.__setattr__(self, "crosstalk", k)

    def confusion(self, d: int) -> np.ndarray:
        if self.crosstalk is None:
            return np.eye(d)
        if self.crosstalk.shape != (d, d):
            raise ValueError(f"crosstalk is {self.crosstalk.shape}, expected ({d}, {d})")
        return self.crosstalk


def neighbour_crosstalk(modes: Sequence[int], leak: float, length: float = 1.0) -> np.ndarray:
    """Confusion table leaking to other modes with weight leak * exp(-(|dl| - 1) / length).

    Widely spaced modes leak less, so the same ``leak`` yields a cleaner table for
    non-adjacent mode sets.
    """
    m = np.asarray(modes, dtype=float)
    gap = np.abs(m[:, None] - m[None, :])
    k = np.where(gap > 0, leak * np.exp(-(gap - 1) / length), 0.0)
    off = k.sum(axis=1)
    if np.any(off >= 1):
        raise ValueError("leak too large: rows would not be stochastic")
    return k + np.diag(1 - off)


def apply_noise(joint: JointTable, noise: NoiseModel) -> JointTable:
    d = joint.dim
    p = noise.visibility * joint.probs + (1 - noise.visibility) / d**2
    k = noise.confusion(d)
    p = np.einsum("abxy,xu,yv->abuv", p, k, k)
    p = p / p.sum(axis=(2, 3), keepdims=True)
    return JointTable(d, joint.n_settings, p)


@dataclass(frozen=True)
class CountRecord:
    """Coincidence counts n(x, y | A, B) for the measured setting pairs."""

    dim: int
    n_settings: int
    counts: dict[tuple[int, int], np.ndarray]
    integration_time: float = 30.0
    meta: str = ""

    def __post_init__(self):
        clean = {}
        for (a, b), table in sorted(self.counts.items()):
            t = np.asarray(table)
            if t.shape != (self.dim, self.dim):
                raise CountFormatError(f"slice ({a}, {b}) has shape {t.shape}, expected ({self.dim}, {self.dim})")
            if not np.issubdtype(t.dtype, np.integer):
                if not np.all(np.equal(np.mod(t, 1), 0)):
                    raise CountFormatError(f"slice ({a}, {b}) has non-integer counts")
            t = t.astype(np.int64)
            if np.any(t < 0):
                raise CountFormatError(f"slice ({a}, {b}) has negative counts")
            if not (1 <= a <= self.n_settings and 1 <= b <= self.n_settings):
                raise CountFormatError(f"slice ({a}, {b}) outside settings 1..{self.n_settings}")
            t.setflags(write=False)
            clean[(int(a), int(b))] = t
        object.__setattr__(self, "counts", clean)

    def __eq__(self, other):
        if not isinstance(other, CountRecord):
            return NotImplemented
        return (
            (self.dim, self.n_settings, self.integration_time, self.meta)
            == (other.dim, other.n_settings, other.integration_time, other.meta)
            and self.counts.keys() == other.counts.keys()
            and all(np.array_equal(self.counts[k], other.counts[k]) for k in self.counts)
        )

    def require_chain(self) -> None:
        for pair in chain_weights(self.dim, self.n_settings):
            if pair not in self.counts:
                raise CountFormatError(f"missing setting pair (A={pair[0]}, B={pair[1]})")
            if self.counts[pair].sum() == 0:
                raise CountFormatError(f"setting pair (A={pair[0]}, B={pair[1]}) has no counts")


def _rng(seed, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def simulate_counts(joint: JointTable, noise: NoiseModel, seed: int, efficiency: float = 1.0,
                    pairs: Iterable[tuple[int, int]] | None = None, integration_time: float = 30.0) -> CountRecord:
    """Poisson counts with mean efficiency*rate*P'(x,y|A,B) + dark/d^2 per cell.

    Only the setting pairs entering I_N are measured unless ``pairs`` is given.
    """
    noisy = apply_noise(joint, noise)
    d = joint.dim
    rng = _rng(seed)
    pairs = sorted(chain_weights(d, joint.n_settings)) if pairs is None else sorted(pairs)
    counts = {}
    for a, b in pairs:
        mean = efficiency * noise.rate_scale * noisy.table(a, b) + noise.dark_rate / d**2
        counts[(a, b)] = rng.poisson(mean)
    meta = f"simulated seed={seed} V={noise.visibility} rate={noise.rate_scale} eff={efficiency:.6g}"
    return CountRecord(d, joint.n_settings, counts, integration_time, meta)


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    method: str


def estimate_IN(counts: CountRecord, method: Literal["bootstrap", "gaussian"] = "bootstrap",
                resamples: int = 1000, seed: int = 0) -> Estimate:
    """I_N from empirical frequencies with a standard error.

    bootstrap: every cell redrawn as Poisson(observed count), I_N recomputed,
    standard deviation over resamples. gaussian: first-order propagation of
    independent Poisson variances through the ratio n/total of each slice.
    """
    counts.require_chain()
    d, n = counts.dim, counts.n_settings
    weights = chain_weights(d, n)
    freqs = {p: counts.counts[p] / counts.counts[p].sum() for p in weights}
    value = evaluate_IN_partial(d, n, freqs)

    if method == "gaussian":
        var = 0.0
        for p, w in weights.items():
            nc = counts.counts[p].astype(float)
            tot = nc.sum()
            term = float(np.sum(w * nc) / tot)
            var += float(np.sum(((w - term) / tot) ** 2 * nc))
        return Estimate(value, math.sqrt(var), "gaussian")
    if method != "bootstrap":
        raise ValueError(f"unknown method {method!r}")
    if resamples < 100:
        raise ValueError("bootstrap needs at least 100 resamples")
    rng = _rng(seed, n)
    total = np.zeros(resamples)
    valid = np.ones(resamples, dtype=bool)
    for p, w in weights.items():
        draws = rng.poisson(counts.counts[p], size=(resamples, d, d))
        tot = draws.sum(axis=(1, 2))
        valid &= tot > 0
        total += np.einsum("rxy,xy->r", draws, w) / np.maximum(tot, 1)
    if valid.sum() < 2:
        raise ValueError("too few non-empty bootstrap resamples")
    return Estimate(value, float(np.std(total[valid], ddof=1)), "bootstrap")


def evaluate_IN_partial(d: int, n: int, freqs: dict[tuple[int, int], np.ndarray]) -> float:
    """evaluate_IN on a table that only has the chain's setting pairs filled in."""
    probs = np.full((n, n, d, d), 1.0 / d**2)
    for (a, b), f in freqs.items():
        probs[a - 1, b - 1] = f
    return evaluate_IN(JointTable(d, n, probs)).value


# --- full protocol ---------------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolResult:
    scan: MinimumScan
    estimates: dict[int, Estimate]
    records: dict[int, CountRecord]
    efficiency: float


def run_table1_protocol(d: int, spectrum: SpiralSpectrum, subspace: SubspaceSelection, noise: NoiseModel,
                        n_range: Iterable[int], seed: int, method: str = "bootstrap",
                        resamples: int = 1000) -> ProtocolResult:
    """Project, concentrate, add noise, count and estimate I_N for every N; keep the minimum."""
    if subspace.dim != d:
        raise ValueError(f"subspace has {subspace.dim} modes, expected {d}")
    state, eff = procrustean_concentrate(project_spectrum(spectrum, subspace))
    estimates: dict[int, Estimate] = {}
    records: dict[int, CountRecord] = {}
    for n in sorted(set(n_range)):
        joint = born_joint_table(state, SettingsFamily(d, n))
        rec = simulate_counts(joint, noise, seed=_seed_for(seed, n), efficiency=eff)
        records[n] = rec
        estimates[n] = estimate_IN(rec, method=method, resamples=resamples, seed=seed)
    scan = scan_minimum({n: (e.value, e.stderr) for n, e in estimates.items()}, dim=d)
    return ProtocolResult(scan, estimates, records, eff)


def _seed_for(seed: int, n: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(n,)).generate_state(1)[0])


def expected_IN(d: int, n: int, noise: NoiseModel, state: SchmidtState | None = None,
                efficiency: float = 1.0) -> float:
    """I_N of the noise model in the infinite-count limit, dark counts included."""
    state = state or make_maximally_entangled(d)
    noisy = evaluate_IN(apply_noise(born_joint_table(state, SettingsFamily(d, n)), noise)).value
    signal = efficiency * noise.rate_scale
    if signal + noise.dark_rate == 0:
        raise ValueError("no expected counts: rate_scale and dark_rate are both zero")
    # dark counts are uniform over cells, and the uniform table has I_N = (d - 1) N
    w = signal / (signal + noise.dark_rate)
    return w * noisy + (1 - w) * (d - 1) * n


def fit_visibility(d: int, target: float, n_range: Iterable[int], noise: NoiseModel | None = None,
                   tol: float = 1e-10) -> float:
    """Visibility at which min_N of the expected I_N equals ``target`` (bisection).

    Lower visibility raises every I_N, so the minimum is monotone in V.
    """
    base = noise or NoiseModel()
    ns = sorted(set(n_range))

    def min_in(v: float) -> float:
        nm = NoiseModel(v, base.crosstalk, base.rate_scale, base.dark_rate)
        return min(expected_IN(d, n, nm) for n in ns)

    lo, hi = 0.0, 1.0
    if min_in(hi) > target:
        raise ValueError(f"target {target} is below the noiseless minimum {min_in(hi):.6g}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if min_in(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --- count file I/O ----------------------------------------------------------------------

_HEADER = re.compile(r"#\s*d=(\d+)\s+N=(\d+)\s+integration_s=([0-9.eE+-]+)\s*$")


def _fmt_time(t: float) -> str:
    return repr(float(t))


def counts_to_csv(rec: CountRecord) -> str:
    buf = io.StringIO()
    buf.write(f"# d={rec.dim} N={rec.n_settings} integration_s={_fmt_time(rec.integration_time)}\n")
    if rec.meta:
        for line in rec.meta.splitlines():
            buf.write(f"# meta: {line}\n")
    buf.write("A,B,x,y,count\n")
    for (a, b), t in sorted(rec.counts.items()):
        for x in range(rec.dim):
            for y in range(rec.dim):
                buf.write(f"{a},{b},{x},{y},{int(t[x, y])}\n")
    return buf.getvalue()


def counts_to_json(rec: CountRecord) -> str:
    data = {
        "dim": rec.dim,
        "n_settings": rec.n_settings,
        "integration_s": rec.integration_time,
        "counts": [{"a": a, "b": b, "table": t.tolist()} for (a, b), t in sorted(rec.counts.items())],
        "meta": rec.meta,
    }
    return json.dumps(data, indent=1) + "\n"


def _parse_csv(text: str) -> CountRecord:
    lines = text.splitlines()
    if not lines:
        raise CountFormatError("line 1: empty file")
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise CountFormatError(f"line 1: expected '# d=<d> N=<N> integration_s=<t>', got {lines[0]!r}")
    d, n, t = int(m.group(1)), int(m.group(2)), float(m.group(3))
    meta = []
    body_start = 1
    while body_start < len(lines) and lines[body_start].startswith("#"):
        meta.append(lines[body_start].partition("# meta: ")[2])
        body_start += 1
    reader = csv.reader(lines[body_start:])
    header = next(reader, None)
    if header != ["A", "B", "x", "y", "count"]:
        raise CountFormatError(f"line {body_start + 1}: expected header A,B,x,y,count, got {header}")
    counts: dict[tuple[int, int], np.ndarray] = {}
    seen: set[tuple[int, int, int, int]] = set()
    for lineno, row in enumerate(reader, start=body_start + 2):
        if not row:
            continue
        if len(row) != 5:
            raise CountFormatError(f"line {lineno}: expected 5 fields, got {len(row)}")
        try:
            a, b, x, y = (int(v) for v in row[:4])
        except ValueError:
            raise CountFormatError(f"line {lineno}: non-integer index in {row}") from None
        try:
            c = int(row[4])
        except ValueError:
            raise CountFormatError(f"line {lineno}, field count: non-integer count {row[4]!r}") from None
        if c < 0:
            raise CountFormatError(f"line {lineno}, field count: negative count {c}")
        if not (0 <= x < d and 0 <= y < d):
            raise CountFormatError(f"line {lineno}: outcome ({x}, {y}) outside 0..{d - 1}")
        if (a, b, x, y) in seen:
            raise CountFormatError(f"line {lineno}: duplicate cell ({a}, {b}, {x}, {y})")
        seen.add((a, b, x, y))
        counts.setdefault((a, b), np.zeros((d, d), dtype=np.int64))[x, y] = c
    for (a, b) in counts:
        cells = sum(1 for k in seen if k[:2] == (a, b))
        if cells != d * d:
            raise CountFormatError(f"slice (A={a}, B={b}) has {cells} of {d * d} cells")
    rec = CountRecord(d, n, counts, t, "\n".join(meta))
    rec.require_chain()
    return rec


def _parse_json(text: str) -> CountRecord:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CountFormatError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
    for key in ("dim", "n_settings", "counts"):
        if key not in data:
            raise CountFormatError(f"missing field {key!r}")
    d, n = data["dim"], data["n_settings"]
    if not isinstance(d, int) or not isinstance(n, int):
        raise CountFormatError("fields 'dim' and 'n_settings' must be integers")
    counts = {}
    for i, entry in enumerate(data["counts"]):
        try:
            a, b, table = entry["a"], entry["b"], entry["table"]
        except (KeyError, TypeError):
            raise CountFormatError(f"counts[{i}]: needs fields a, b, table") from None
        flat = [v for row in table for v in row]
        bad = [v for v in flat if not (isinstance(v, int) and not isinstance(v, bool))]
        if bad:
            raise CountFormatError(f"counts[{i}] (A={a}, B={b}): non-integer count {bad[0]!r}")
        counts[(a, b)] = np.array(table, dtype=np.int64)
    rec = CountRecord(d, n, counts, float(data.get("integration_s", 0.0)), data.get("meta", ""))
    rec.require_chain()
    return rec


def load_counts(source, fmt: Literal["csv", "json"] | None = None) -> CountRecord:
    """Read a CountRecord from a path or an open text stream."""
    if hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", "")
    else:
        path = Path(source)
        text = path.read_text()
        name = path.name
    if fmt is None:
        fmt = "json" if str(name).endswith(".json") else "csv"
    if fmt == "csv":
        return _parse_csv(text)
    if fmt == "json":
        return _parse_json(text)
    raise ValueError(f"unknown format {fmt!r}")


def save_counts(rec: CountRecord, path, fmt: Literal["csv", "json"] | None = None) -> None:
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    text = counts_to_json(rec) if fmt == "json" else counts_to_csv(rec)
    path.write_text(text)
