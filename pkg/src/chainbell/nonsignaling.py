"""Tripartite boxes P(x,y,z|a,b,c): nonsignaling checks, the distance bound and LP exploration."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, replace

import numpy as np

from .chained_bell import chain_weights, evaluate_IN
from .qudit_core import JointTable, SchmidtState, SettingsFamily, born_joint_table
from .simplex import linprog

CERT_TOL = 1e-9
SLACK_TOL = 1e-8
LP_GUARD = 4096

CONDITIONS = ("XY|ABC=XY|AB", "XZ|ABC=XZ|AC", "YZ|ABC=YZ|BC")


class SignalingError(ValueError):
    pass


@dataclass(frozen=True)
class NSBox:
    """P(x, y, z | a, b, c) stored as table[a, b, c, x, y, z] (0-based indices)."""

    table: np.ndarray
    certified: bool = False

    def __post_init__(self):
        t = np.array(self.table, dtype=float, copy=True)
        if t.ndim != 6:
            raise ValueError(f"box table must be 6-dimensional, got shape {t.shape}")
        if t.shape[3] != t.shape[4] or t.shape[0] != t.shape[1]:
            raise ValueError(f"expected |X|=|Y| and |A|=|B|, got shape {t.shape}")
        if np.any(t < -1e-12):
            raise ValueError("negative probabilities in box")
        t = np.clip(t, 0.0, None)
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def d(self) -> int:
        return self.table.shape[3]

    @property
    def n_settings(self) -> int:
        return self.table.shape[0]

    @property
    def z(self) -> int:
        return self.table.shape[5]

    @property
    def c(self) -> int:
        return self.table.shape[2]

    def is_normalized(self, tol: float = CERT_TOL) -> bool:
        return bool(np.all(np.abs(self.table.sum(axis=(3, 4, 5)) - 1.0) <= tol))

    def xy(self) -> np.ndarray:
        return self.table.sum(axis=5)

    def xz(self) -> np.ndarray:
        return self.table.sum(axis=4)

    def yz(self) -> np.ndarray:
        return self.table.sum(axis=3)

    def joint(self, c: int = 0) -> JointTable:
        """Bipartite P_XY|AB at a fixed value of C."""
        return JointTable(self.d, self.n_settings, self.xy()[:, :, c])

    def to_dict(self) -> dict:
        n, _, c, d, _, z = self.table.shape
        return {
            "sizes": {"x": d, "y": d, "z": z, "a": n, "b": n, "c": c},
            "order": ["a", "b", "c", "x", "y", "z"],
            "certified": self.certified,
            "table": self.table.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NSBox":
        box = cls(np.asarray(data["table"], dtype=float))
        sizes = data.get("sizes")
        if sizes:
            expect = (sizes["a"], sizes["b"], sizes["c"], sizes["x"], sizes["y"], sizes["z"])
            if box.table.shape != tuple(expect):
                raise ValueError(f"table shape {box.table.shape} does not match sizes {expect}")
        if data.get("certified"):
            box = certify(box)
        return box

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class Violation:
    condition: str
    settings: tuple[int, int]
    magnitude: float


def box_from_joint(joint: JointTable, z: int = 1) -> NSBox:
    """Embed a bipartite table with a trivial third party (Z always 0, one C value)."""
    t = np.zeros((joint.n_settings, joint.n_settings, 1, joint.dim, joint.dim, z))
    t[:, :, 0, :, :, 0] = joint.probs
    return NSBox(t)


def _spread(marg: np.ndarray, axis: int) -> np.ndarray:
    return marg.max(axis=axis) - marg.min(axis=axis)


def check_nonsignaling(box: NSBox, tol: float = CERT_TOL) -> list[Violation]:
    """One Violation per (condition, fixed setting pair) whose marginal moves by more than tol.

    Magnitude is the largest change of any marginal entry as the remote setting varies.
    """
    if not box.is_normalized():
        raise ValueError("box is not normalized")
    out: list[Violation] = []
    # XY must not depend on C: spread over c, remaining axes (a, b, x, y)
    checks = (
        (CONDITIONS[0], _spread(box.xy(), 2)),  # over c; remaining (a, b)
        (CONDITIONS[1], _spread(box.xz(), 1)),  # over b; remaining (a, c)
        (CONDITIONS[2], _spread(box.yz(), 0)),  # over a; remaining (b, c)
    )
    for name, spread in checks:
        worst = spread.reshape(spread.shape[0], spread.shape[1], -1).max(axis=2)
        for i, j in zip(*np.nonzero(worst > tol)):
            out.append(Violation(name, (int(i) + 1, int(j) + 1), float(worst[i, j])))
    return out


def certify(box: NSBox, tol: float = CERT_TOL) -> NSBox:
    violations = check_nonsignaling(box, tol)
    if violations:
        raise SignalingError(f"box signals: {violations[:3]}{' ...' if len(violations) > 3 else ''}")
    return replace(box, certified=True)


def statistical_distance(p, q, d: int) -> float:
    """sum |p - q| / d with d the size of the X alphabet (not of the joint alphabet)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"alphabet mismatch: {p.shape} vs {q.shape}")
    return float(np.abs(p - q).sum() / d)


@dataclass(frozen=True)
class DistanceResult:
    a: int
    c: int
    delta: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.delta


def box_IN(box: NSBox) -> float:
    return evaluate_IN(box.joint(0)).value


def theorem1_check(box: NSBox, i_n: float | None = None, tol: float = SLACK_TOL) -> list[DistanceResult]:
    """Delta(P_XZ|AC, uniform x P_Z|C) against (d/4) I_N for every (A, C)."""
    if check_nonsignaling(box):
        raise SignalingError("the distance bound needs a nonsignaling box")
    d = box.d
    if i_n is None:
        i_n = box_IN(box)
    bound = d / 4.0 * i_n
    xz = box.xz()[:, 0]  # any B, by nonsignaling; shape (a, c, x, z)
    results = []
    for a in range(box.n_settings):
        for c in range(box.c):
            pxz = xz[a, c]
            pz = pxz.sum(axis=0)
            delta = statistical_distance(pxz, np.outer(np.full(d, 1.0 / d), pz), d)
            r = DistanceResult(a + 1, c + 1, delta, bound)
            if r.slack < -tol:
                raise AssertionError(f"distance bound violated at A={a + 1}, C={c + 1}: slack {r.slack:.3e}")
            results.append(r)
    return results


# --- pointwise inequalities behind the distance bound ---------------------------------


@dataclass(frozen=True)
class PointwiseReport:
    i_n: float
    worst_slack: dict[str, float]
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures


def _pointwise_joint(probs: np.ndarray, tol: float) -> tuple[float, dict[str, float], list[str]]:
    d, n = probs.shape[2], probs.shape[0]
    joint = JointTable(d, n, probs)
    i_n = evaluate_IN(joint).value
    pa = joint.alice_marginals()[:, 0]  # P(X_A = x), shape (A, x)
    pb = joint.bob_marginals()[0]  # P(Y_B = y), shape (B, y)
    slack: dict[str, float] = {}
    fails: list[str] = []

    def record(name: str, lhs: float, rhs: float, where: str):
        s = rhs - lhs
        slack[name] = min(slack.get(name, np.inf), s)
        if s < -tol:
            fails.append(f"{name} at {where}: {lhs:.12g} > {rhs:.12g}")

    # P(X_A = Y_B) <= 1 - |P(X_A=x) - P(Y_B=x)|
    for a in range(n):
        for b in range(n):
            eq = float(np.trace(probs[a, b]))
            for x in range(d):
                record("agreement", eq, 1 - abs(pa[a, x] - pb[b, x]), f"A={a + 1},B={b + 1},x={x}")

    # chain: I_N >= 2N - sum P(equal) >= sum |..| + |..| >= sum |P(X_i=x)-P(X_{i+1}=x)| >= |P(X=x)-P(X=x+1)|
    # X_{N+1} := X_1 + 1, so P(X_{N+1} = x) = P(X_1 = x - 1) and equality with Y_N means Y_N = X_1 + 1
    p_equal = 0.0
    for i in range(n):
        p_equal += np.trace(probs[i, i])
        if i + 1 < n:
            p_equal += np.trace(probs[i + 1, i])
        else:
            p_equal += sum(probs[0, n - 1, x, (x + 1) % d] for x in range(d))
    step1 = 2 * n - p_equal
    record("chain-equal", step1, i_n, "chain")

    def p_next(i, x):
        return pa[i + 1, x] if i + 1 < n else pa[0, (x - 1) % d]

    for x in range(d):
        step2 = sum(abs(pa[i, x] - pb[i, x]) + abs(p_next(i, x) - pb[i, x]) for i in range(n))
        step3 = sum(abs(pa[i, x] - p_next(i, x)) for i in range(n))
        record("chain-marginals", step2, step1, f"x={x}")
        record("chain-triangle", step3, step2, f"x={x}")
        # telescoping at a single label closes the cycle at X_1; other starting
        # points use label x on one arc and x-1 on the other, still bounded by step1
        record("chain-telescope", abs(pa[0, x] - pa[0, (x - 1) % d]), step3, f"A=1,x={x}")
        for i in range(n):
            record("adjacent-labels", abs(pa[i, x] - pa[i, (x - 1) % d]), i_n, f"A={i + 1},x={x}")

    # |P(X=x) - 1/d| <= (d/4) I_N, both parties
    for a in range(n):
        for x in range(d):
            record("marginal-uniform", abs(pa[a, x] - 1 / d), d / 4 * i_n, f"A={a + 1},x={x}")
            record("marginal-uniform", abs(pb[a, x] - 1 / d), d / 4 * i_n, f"B={a + 1},y={x}")
    return i_n, slack, fails


def appendixA_pointwise_check(box: NSBox, tol: float = SLACK_TOL, per_z: bool = True) -> PointwiseReport:
    """Check the intermediate inequalities of the distance-bound proof on a certified box.

    Runs on the bipartite marginal and, with ``per_z``, on every Z-conditioned box
    P(x, y | a, b, c, z) with P(z|c) > 0 (each is itself nonsignaling).
    """
    if check_nonsignaling(box):
        raise SignalingError("pointwise checks need a nonsignaling box")
    i_n, slack, fails = _pointwise_joint(box.xy()[:, :, 0], tol)
    if per_z:
        for c in range(box.c):
            pz = box.table[0, 0, c].sum(axis=(0, 1))
            for z in range(box.z):
                if pz[z] <= 1e-12:
                    continue
                cond = box.table[:, :, c, :, :, z] / pz[z]
                _, s, f = _pointwise_joint(cond / cond.sum(axis=(2, 3), keepdims=True), tol)
                for k, v in s.items():
                    slack[k] = min(slack.get(k, np.inf), v)
                fails.extend(f"{m} (C={c + 1}, z={z})" for m in f)
    return PointwiseReport(i_n, slack, fails)


# --- sampler -------------------------------------------------------------------------


def chained_pr_box(d: int, n: int, shift: int = 0) -> np.ndarray:
    """Nonsignaling box with I_N = 0 and uniform marginals (chained PR box)."""
    probs = np.full((n, n, d, d), 1.0 / d**2)
    pairs = {(i, i): 0 for i in range(n)}
    pairs.update({(i + 1, i): 0 for i in range(n - 1)})
    pairs[(0, n - 1)] = 1  # Y_N = X_1 + 1
    for (a, b), s in pairs.items():
        probs[a, b] = 0.0
        for x in range(d):
            probs[a, b, (x + shift) % d, (x + shift + s) % d] = 1.0 / d
    return probs


def _random_quantum(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    amps = rng.dirichlet(np.full(d, 0.7)) ** 0.5
    state = SchmidtState(d, amps / np.linalg.norm(amps))
    probs = born_joint_table(state, SettingsFamily(d, n)).probs
    # random local relabelings keep the box nonsignaling and vary which outcome is favoured
    sa, sb = rng.integers(d), rng.integers(d)
    return np.roll(np.roll(probs, sa, axis=2), sb, axis=3)


def _random_deterministic(rng: np.random.Generator, d: int, n: int) -> np.ndarray:
    f = rng.integers(d, size=n)
    g = rng.integers(d, size=n)
    probs = np.zeros((n, n, d, d))
    for a in range(n):
        for b in range(n):
            probs[a, b, f[a], g[b]] = 1.0
    return probs


def sample_nonsignaling(d: int, n: int, z: int = 1, seed: int = 0, c: int = 1, weights=None) -> NSBox:
    """Random certified nonsignaling box.

    A convex mixture of quantum boxes (random Schmidt states), local deterministic
    boxes, the uniform box and chained PR boxes. Within each family Z reveals
    which member was drawn (relabelled by a C-dependent permutation), so Z carries
    real side information while remaining independent of A and B.
    ``weights`` gives the family weights (quantum, deterministic, uniform[, PR]).
    """
    if n * n * c * d * d * z > 10**5:
        raise ValueError("alphabet sizes too large for the sampler")
    rng = np.random.default_rng(seed)
    if weights is None:
        weights = rng.dirichlet(np.ones(4))
    weights = np.asarray(weights, dtype=float)
    if weights.size == 3:
        weights = np.append(weights, 0.0)
    if weights.size != 4 or np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise ValueError("weights must be 3 or 4 nonnegative numbers summing to 1")

    perms = [rng.permutation(z) for _ in range(c)]
    table = np.zeros((n, n, c, d, d, z))
    makers = (
        lambda: _random_quantum(rng, d, n),
        lambda: _random_deterministic(rng, d, n),
        lambda: np.full((n, n, d, d), 1.0 / d**2),
        lambda: chained_pr_box(d, n, int(rng.integers(d))),
    )
    for w, make in zip(weights, makers):
        label_p = rng.dirichlet(np.ones(z))
        for lam in range(z):
            sub = make()
            for ch in range(c):
                table[:, :, ch, :, :, perms[ch][lam]] += w * label_p[lam] * sub
    box = NSBox(table)
    try:
        return certify(box)
    except SignalingError as exc:
        raise RuntimeError(f"sampler produced a signaling box (seed={seed})") from exc


# --- linear programming -------------------------------------------------------------


@dataclass(frozen=True)
class NSPolytopeLP:
    """Constraint matrices over the flattened variables P[a, b, c, x, y, z]."""

    d: int
    n: int
    z: int
    c: int
    A_eq: np.ndarray
    b_eq: np.ndarray
    in_row: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n, self.n, self.c, self.d, self.d, self.z)


def build_polytope(d: int, n: int, z: int, c: int = 1) -> NSPolytopeLP:
    shape = (n, n, c, d, d, z)
    nvar = int(np.prod(shape))
    if nvar > LP_GUARD:
        raise ValueError(f"{nvar} LP variables exceeds guard {LP_GUARD}")
    idx = np.arange(nvar).reshape(shape)
    rows: list[np.ndarray] = []
    rhs: list[float] = []

    def add(plus, minus=None, value=0.0):
        row = np.zeros(nvar)
        row[np.ravel(plus)] += 1.0
        if minus is not None:
            row[np.ravel(minus)] -= 1.0
        rows.append(row)
        rhs.append(value)

    for a, b, ch in itertools.product(range(n), range(n), range(c)):
        add(idx[a, b, ch], value=1.0)
    # each marginal at setting k > 0 equals the one at setting 0
    for a, b, x, y in itertools.product(range(n), range(n), range(d), range(d)):
        for ch in range(1, c):
            add(idx[a, b, ch, x, y, :], idx[a, b, 0, x, y, :])
    for a, ch, x, zo in itertools.product(range(n), range(c), range(d), range(z)):
        for b in range(1, n):
            add(idx[a, b, ch, x, :, zo], idx[a, 0, ch, x, :, zo])
    for b, ch, y, zo in itertools.product(range(n), range(c), range(d), range(z)):
        for a in range(1, n):
            add(idx[a, b, ch, :, y, zo], idx[0, b, ch, :, y, zo])

    in_row = np.zeros(nvar)
    for (a, b), w in chain_weights(d, n).items():
        in_row[idx[a - 1, b - 1, 0]] += w[:, :, None]
    return NSPolytopeLP(d, n, z, c, np.array(rows), np.array(rhs), in_row)


def delta_objective(poly: NSPolytopeLP, sign_pattern, a0: int = 1, c0: int = 1) -> np.ndarray:
    """Linear objective sum_{x,z} s[x,z] (P(x,z|a0,c0) - P(z|c0)/d) / d.

    With s = sign(P(x,z) - P(z)/d) this equals Delta(P_XZ|AC, uniform x P_Z|C).
    """
    d, z = poly.d, poly.z
    s = np.asarray(sign_pattern, dtype=float).reshape(d, z) if np.size(sign_pattern) == d * z else None
    if s is None:
        raise ValueError(f"sign pattern needs {d}x{z} = {d * z} entries")
    coef_xz = (s - s.mean(axis=0, keepdims=True)) / d  # mean over x = (1/d) sum_x'
    obj = np.zeros(poly.shape)
    # B is fixed to the first setting; nonsignaling makes the choice immaterial
    obj[a0 - 1, 0, c0 - 1] = coef_xz[:, None, :]
    return obj.ravel()


def lp_max_delta(d: int, n: int, z: int, i_cap: float, sign_pattern, c: int = 1, poly: NSPolytopeLP | None = None) -> float:
    """Max of the sign-pattern objective over the nonsignaling polytope with I_N <= i_cap."""
    if i_cap < 0:
        raise ValueError("i_cap must be nonnegative")
    poly = poly or build_polytope(d, n, z, c)
    res = linprog(
        delta_objective(poly, sign_pattern),
        A_ub=poly.in_row[None, :],
        b_ub=[i_cap],
        A_eq=poly.A_eq,
        b_eq=poly.b_eq,
        maximize=True,
    )
    return res.fun


def sign_patterns(d: int, z: int):
    """All sign patterns, skipping ones that are constant in x for every z (objective 0)."""
    for bits in itertools.product((1.0, -1.0), repeat=d * z):
        s = np.array(bits).reshape(d, z)
        if np.all(s == s[:1]):
            continue
        yield s


def lp_max_delta_all(d: int, n: int, z: int, i_cap: float, c: int = 1) -> float:
    """Max Delta over the polytope: the maximum over all sign patterns."""
    poly = build_polytope(d, n, z, c)
    best = 0.0
    for s in sign_patterns(d, z):
        best = max(best, lp_max_delta(d, n, z, i_cap, s, c, poly))
    return best


def lp_curve(d: int, n: int, z: int, caps, c: int = 1) -> list[tuple[float, float, float]]:
    """(i_cap, max Delta, (d/4) i_cap) rows."""
    return [(float(cap), lp_max_delta_all(d, n, z, cap, c), d / 4.0 * float(cap)) for cap in caps]
