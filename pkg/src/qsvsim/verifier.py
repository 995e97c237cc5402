"""Certify the efficiency/security trade-off numerically.

For every configuration we compute

* ``eps_h``: half trace distance between the honest game output and the
  filtered ideal output, and
* ``eps_d``: the same distance between the attacked game and the ideal
  resource driven by the best simulator bias ``q``, minimised over ``q``,

and compare ``eps_h + eps_d`` with the closed-form lower bound. The games
have trivial input, so these distances are exact for the state games.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.optimize import minimize_scalar

from . import attacks as atk
from .channels import apply, dephasing, depolarizing, identity
from .errors import ConfigError, UnknownTag
from .metrics import trace_norm_blocks
from .protocols import (
    AcceptanceTest,
    GameOutput,
    Protocol,
    RoundDistribution,
    TargetSpec,
    default_test,
    game_output,
    ideal_output,
)

log = logging.getLogger(__name__)

MARGIN_TOL = 1e-9
GRID_STEP = 1e-3
REFINE_TOL = 1e-6
LABEL = "exact-for-state-games"
TAGS = ("simple-single", "simple-multi", "general-single", "general-multi",
        "appendix-measurement", "appendix-unital")
CSV_COLUMNS = ("config_id", "theorem", "N", "d", "K", "attack", "eps_h", "eps_d", "q_star",
               "bound", "margin", "runtime_ms")


def _sig12(x: float) -> float:
    return float(f"{x:.12g}")


# --------------------------------------------------------------------------
# game distances
# --------------------------------------------------------------------------


def output_distance(real: GameOutput, ideal: GameOutput) -> float:
    """Half trace distance of two states on ``[d'] ⊕ [1]``."""
    return 0.5 * (trace_norm_blocks([real.accept - ideal.accept]) + abs(real.abort - ideal.abort))


def eval_eps_honest(p: Protocol) -> float:
    """Distance between the honest run and the filtered ideal resource."""
    real = game_output(p, p.target.matrix)
    ideal = ideal_output(p.target, 1.0, p.post)
    return float(min(max(output_distance(real, ideal), 0.0), 1.0))


def eps_dishonest_at(p: Protocol, rho, q: float, real: GameOutput | None = None) -> float:
    real = real or game_output(p, rho)
    return output_distance(real, ideal_output(p.target, q, p.post))


def eval_eps_dishonest(p: Protocol, attack) -> tuple[float, float]:
    """``(ε_D, q*)``: the attacked game against the best simulator bias.

    A 10⁻³ grid over ``q`` is the certificate; the best grid cell is then
    refined by a bounded scalar search to 10⁻⁶, and the acceptance mass of
    the attacked game (the bias used in the analytic argument) is tried too.
    """
    rho = attack.matrix if isinstance(attack, atk.AttackConstruction) else attack
    real = game_output(p, rho)
    target = ideal_output(p.target, 1.0, p.post).accept

    def f(q):
        return 0.5 * (trace_norm_blocks([real.accept - q * target]) + abs(real.abort - (1.0 - q)))

    grid = np.linspace(0.0, 1.0, int(round(1 / GRID_STEP)) + 1)
    vals = np.array([f(q) for q in grid])
    k = int(np.argmin(vals))
    best_q, best = float(grid[k]), float(vals[k])
    lo, hi = max(0.0, best_q - GRID_STEP), min(1.0, best_q + GRID_STEP)
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": REFINE_TOL})
    for q in (float(res.x), min(max(real.accept_mass, 0.0), 1.0)):
        v = f(q)
        if v < best:
            best_q, best = q, v
    return float(min(max(best, 0.0), 1.0)), best_q


# --------------------------------------------------------------------------
# bounds
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundCertificate:
    tag: str
    value: float
    formula: str


def theorem_bound(tag: str, N: float, purity: bool | None = None, omega: float = 1.0,
                  omega_prime: float = 1.0) -> BoundCertificate:
    """Closed-form lower bound on ``ε_H + ε_D``."""
    if tag not in TAGS:
        raise UnknownTag(tag)
    if N < 1:
        raise ValueError("N must be at least 1")
    if tag == "appendix-measurement":
        return BoundCertificate(tag, 1.0 / (16.0 * N), "1/(16N)")
    if tag == "appendix-unital":
        return BoundCertificate(tag, omega_prime / (4.0 * omega * N), "w'/(4wN)")
    if purity is None:
        raise ValueError(f"{tag} needs the target purity")
    if purity:
        return BoundCertificate(tag, 1.0 / (8.0 * math.sqrt(N)), "1/(8sqrt(N))")
    return BoundCertificate(tag, 1.0 / (27.0 * N), "1/(27N)")


@dataclass(frozen=True)
class ConcavityReport:
    a: float
    second_derivatives: tuple
    jensen_lhs: float
    jensen_rhs: float

    @property
    def concave(self) -> bool:
        return all(v < 0 for v in self.second_derivatives)

    @property
    def jensen_holds(self) -> bool:
        return self.jensen_lhs <= self.jensen_rhs + 1e-12

    @property
    def ok(self) -> bool:
        return self.concave and self.jensen_holds


def f_a(a: float, x):
    return np.sqrt(1.0 - np.power(a, x))


def f_a_second(a: float, z):
    """Closed-form second derivative of ``√(1 − a^X)``."""
    az = np.power(a, z)
    return -az * math.log(a) ** 2 * (2.0 - az) / (4.0 * (1.0 - az) ** 1.5)


def concavity_check(a: float, xs, weights=None) -> ConcavityReport:
    """Check ``f_a'' < 0`` at the sample points and Jensen's inequality for their law."""
    if not 0.0 < a < 1.0:
        raise ValueError("a must lie in (0, 1)")
    xs = np.asarray(xs, dtype=float)
    w = np.full(xs.size, 1.0 / xs.size) if weights is None else np.asarray(weights, dtype=float)
    w = w / w.sum()
    second = tuple(float(v) for v in f_a_second(a, xs))
    lhs = float(w @ f_a(a, xs))
    rhs = float(f_a(a, w @ xs))
    return ConcavityReport(a, second, lhs, rhs)


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    config_id: str
    theorem: str
    N: float
    d: int
    K: int
    attack: str
    eps_h: float
    eps_d: float
    q_star: float
    bound: float
    margin: float
    runtime_ms: float = field(default=0.0, compare=False)
    label: str = LABEL

    def __post_init__(self):
        for f in ("N", "eps_h", "eps_d", "q_star", "bound", "margin", "runtime_ms"):
            object.__setattr__(self, f, _sig12(float(getattr(self, f))))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "K", int(self.K))

    @property
    def passed(self) -> bool:
        return self.margin >= -MARGIN_TOL

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def make_report(config_id: str, tag: str, p: Protocol, attack: atk.AttackConstruction,
                bound: BoundCertificate, t0: float) -> VerificationReport:
    eh = eval_eps_honest(p)
    ed, q = eval_eps_dishonest(p, attack)
    return VerificationReport(config_id, tag, p.N, p.target.d, p.target.K, attack.kind, eh, ed, q,
                              bound.value, eh + ed - bound.value, (time.perf_counter() - t0) * 1e3)


def emit(reports, fmt: str = "csv") -> bytes:
    """Serialise reports; floats carry 12 significant digits."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in reports:
            row = []
            for c in CSV_COLUMNS:
                v = getattr(r, c)
                row.append(f"{v:.12g}" if isinstance(v, float) else v)
            w.writerow(row)
        return buf.getvalue().encode()
    if fmt == "json":
        return (json.dumps([r.to_dict() for r in reports], indent=2) + "\n").encode()
    raise ValueError(f"unknown format {fmt!r}")


def parse_reports(data: bytes, fmt: str = "json") -> list[VerificationReport]:
    text = data.decode()
    if fmt == "json":
        return [VerificationReport.from_dict(d) for d in json.loads(text)]
    rows = list(csv.DictReader(io.StringIO(text)))
    out = []
    for row in rows:
        kw = {c: row[c] for c in CSV_COLUMNS}
        for c in ("N", "eps_h", "eps_d", "q_star", "bound", "margin", "runtime_ms"):
            kw[c] = float(kw[c])
        out.append(VerificationReport(**kw))
    return out


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


def _cplx_list(values, where: str) -> np.ndarray:
    out = []
    for k, v in enumerate(values):
        if isinstance(v, (int, float)):
            out.append(complex(v))
        elif isinstance(v, (list, tuple)) and len(v) == 2:
            out.append(complex(float(v[0]), float(v[1])))
        else:
            raise ConfigError(f"{where}[{k}]: expected a number or [re, im] pair")
    return np.array(out, dtype=np.complex128)


def _matrix(value, d: int, where: str) -> np.ndarray:
    """Accept a d×d nested list or a flat row-major list of d² entries."""
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list")
    nested = len(value) == d and all(isinstance(row, list) and len(row) == d for row in value)
    if nested:
        return np.array([_cplx_list(row, f"{where}[{i}]") for i, row in enumerate(value)])
    flat = _cplx_list(value, where)
    if flat.size != d * d:
        raise ConfigError(f"{where}: expected {d * d} entries, got {flat.size}")
    return flat.reshape(d, d)


def build_target(spec: dict, where: str) -> TargetSpec:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = spec.get("kind")
    dims = spec.get("dims")
    if not isinstance(dims, list) or not dims or not all(isinstance(x, int) and x > 0 for x in dims):
        raise ConfigError(f"{where}.dims: expected a list of positive integers")
    d = math.prod(dims)
    if kind == "pure":
        if "amplitudes" not in spec:
            raise ConfigError(f"{where}.amplitudes: required for a pure target")
        v = _cplx_list(spec["amplitudes"], f"{where}.amplitudes")
        if v.size != d:
            raise ConfigError(f"{where}.amplitudes: expected {d} entries, got {v.size}")
        if np.linalg.norm(v) == 0:
            raise ConfigError(f"{where}.amplitudes: zero vector")
        return TargetSpec.from_amplitudes(v, dims)
    if kind == "mixed":
        if "spectrum" in spec:
            s = np.asarray(spec["spectrum"], dtype=float)
            if s.size != d or abs(s.sum() - 1) > 1e-9 or (s < 0).any():
                raise ConfigError(f"{where}.spectrum: need {d} non-negative values summing to 1")
            return TargetSpec.from_matrix(np.diag(s), dims)
        if "matrix" in spec:
            try:
                return TargetSpec.from_matrix(_matrix(spec["matrix"], d, f"{where}.matrix"), dims)
            except ConfigError:
                raise
            except Exception as exc:
                raise ConfigError(f"{where}.matrix: {exc}") from exc
        raise ConfigError(f"{where}: a mixed target needs spectrum or matrix")
    raise ConfigError(f"{where}.kind: expected 'pure' or 'mixed', got {kind!r}")


def build_test(spec, t: TargetSpec, where: str) -> AcceptanceTest:
    if spec is None or spec == "default" or (isinstance(spec, dict) and spec.get("kind") == "default"):
        return default_test(t)
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = spec.get("kind")
    eff = spec.get("effect", "default")
    if kind == "always-accept":
        return AcceptanceTest.always_accept(t.d)
    if isinstance(eff, str):
        if eff not in ("default", "target", "support"):
            raise ConfigError(f"{where}.effect: unknown named effect {eff!r}")
        e = default_test(t).effect
    else:
        e = _matrix(eff, t.d, f"{where}.effect")
    try:
        if kind == "all-pass":
            return AcceptanceTest.all_pass(e)
        if kind == "threshold":
            return AcceptanceTest.threshold(e, k=spec.get("k"), fraction=spec.get("fraction"))
    except Exception as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: expected all-pass, threshold, always-accept or default, got {kind!r}")


def build_post(spec, t: TargetSpec, where: str):
    if spec is None:
        return None
    kind = spec.get("kind") if isinstance(spec, dict) else spec
    if kind == "dephasing":
        return dephasing(t.d, float(spec.get("strength", 1.0)) if isinstance(spec, dict) else 1.0)
    if kind == "depolarizing":
        return depolarizing(t.d, float(spec.get("p", 0.5)))
    if kind == "identity":
        return identity(t.object)
    raise ConfigError(f"{where}.kind: expected dephasing, depolarizing or identity, got {kind!r}")


def _protocol_variants(spec: dict, where: str) -> list[dict]:
    """Expand list-valued ``N`` / geometric means into one entry per value."""
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    typ = spec.get("type")
    if typ == "simple":
        ns = spec.get("N")
        ns = ns if isinstance(ns, list) else [ns]
        if not all(isinstance(n, int) and n >= 1 for n in ns):
            raise ConfigError(f"{where}.N: expected a positive integer or a list of them")
        return [dict(spec, N=n) for n in ns]
    if typ == "general":
        tab = spec.get("p_table")
        if isinstance(tab, dict) and tab.get("kind") == "geometric":
            means = tab.get("mean")
            means = means if isinstance(means, list) else [means]
            if not all(isinstance(m, (int, float)) and m > 1 for m in means):
                raise ConfigError(f"{where}.p_table.mean: expected numbers > 1")
            return [dict(spec, p_table=dict(tab, mean=m)) for m in means]
        return [spec]
    raise ConfigError(f"{where}.type: expected 'simple' or 'general', got {typ!r}")


def build_protocol(spec: dict, t: TargetSpec, where: str) -> Protocol:
    test = build_test(spec.get("test"), t, f"{where}.test")
    post = build_post(spec.get("post"), t, f"{where}.post")
    if spec["type"] == "simple":
        return Protocol.simple(t, spec["N"], test, post=post)
    tab = spec.get("p_table")
    chi = []
    for k, c in enumerate(spec.get("chi", [])):
        v = _cplx_list(c, f"{where}.chi[{k}]")
        v = v / np.linalg.norm(v)
        chi.append(np.outer(v, v.conj()))
    kw = {"chi": chi, "single_client": t.K == 1}
    try:
        if isinstance(tab, dict):
            kind = tab.get("kind")
            if kind == "geometric":
                dist = RoundDistribution.truncated_geometric(float(tab["mean"]), tab.get("cap"), **kw)
            elif kind == "uniform":
                dist = RoundDistribution.uniform(int(tab["low"]), int(tab["high"]), **kw)
            elif kind == "point":
                dist = RoundDistribution.point(int(tab["r"]), int(tab["i"]), **kw)
            else:
                raise ConfigError(f"{where}.p_table.kind: expected geometric, uniform or point, got {kind!r}")
        elif isinstance(tab, list):
            dist = RoundDistribution({(int(r), int(i)): float(p) for r, i, p in tab}, **kw)
        else:
            raise ConfigError(f"{where}.p_table: expected a list of [r, i, p] or a builder object")
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{where}.p_table: {exc}") from exc
    return Protocol(t, dist, test, post)


def _tag_for(p: Protocol, attack_kind: str) -> str:
    if attack_kind == "measurement":
        return "appendix-measurement"
    if attack_kind == "depolarized":
        return "appendix-unital"
    single = p.target.K == 1
    if p.kind == "simple":
        return "simple-single" if single else "simple-multi"
    return "general-single" if single else "general-multi"


@dataclass(frozen=True)
class Skipped:
    config_id: str
    reason: str


def _is_identity_post(p: Protocol) -> bool:
    if p.post is None:
        return True
    return p.post.domain == p.post.codomain and np.allclose(p.post.action, np.eye(p.post.action.shape[0]))


def evaluate(config_id: str, t: TargetSpec, p: Protocol, attack_spec, where: str):
    """Build the attack for one grid point and verify it; returns a report or a Skipped."""
    t0 = time.perf_counter()
    N = p.N
    kind = attack_spec if isinstance(attack_spec, str) else "custom"
    if kind in ("pure-tau", "mixed-alpha") and not _is_identity_post(p):
        return Skipped(config_id, f"{kind} bounds assume the accepted state is output unchanged")
    try:
        if kind == "pure-tau":
            if not t.is_pure:
                return Skipped(config_id, "pure-tau needs a pure target")
            attack = atk.pure_attack_state(t, N)
        elif kind == "mixed-alpha":
            if t.is_pure:
                return Skipped(config_id, "mixed-alpha is the construction for mixed targets")
            attack = atk.mixed_attack_state(t, N)
            if attack.params["gap"] < 2 * atk.ALPHA / N:
                return Skipped(config_id, f"spectral gap {attack.params['gap']:.3g} below 2*alpha/N")
        elif kind == "measurement":
            if not t.is_pure or t.d < 3:
                return Skipped(config_id, "measurement attack needs a pure target with d >= 3")
            attack = atk.measurement_attack_construction(t, N)
            p = Protocol(p.target, p.rounds, p.tests, attack.measurement, p.kind)
        elif kind == "depolarized":
            post = p.post if p.post is not None else dephasing(t.d)
            p = Protocol(p.target, p.rounds, p.tests, post, p.kind)
            w = atk.omega(t.matrix)
            if w <= 0:
                return Skipped(config_id, "the maximally mixed target cannot be attacked by depolarising")
            attack = atk.depolarized_attack_state(t, min(1.0, 1.0 / (2.0 * w * N)))
        elif isinstance(attack_spec, dict) and "custom" in attack_spec:
            if _custom_dim(attack_spec["custom"]) != t.d:
                return Skipped(config_id, f"custom state does not have dimension {t.d}")
            attack = atk.custom_attack(_custom_state(attack_spec["custom"], t.d, f"{where}.custom"))
        else:
            raise ConfigError(f"{where}: unknown attack {attack_spec!r}")
    except (atk.PerturbationBreaksPositivity, atk.DimensionTooSmall, atk.TargetNotPure) as exc:
        return Skipped(config_id, str(exc))
    tag = _tag_for(p, attack.kind)
    if attack.kind == "custom":
        # the bounds say some attack reaches them, not that every attack does
        bound = BoundCertificate(tag, 0.0, "none")
    elif tag == "appendix-unital":
        w = atk.omega(t.matrix)
        wp = atk.omega(apply(p.post, t.state).matrix)
        bound = theorem_bound(tag, N, omega=w, omega_prime=wp)
    else:
        bound = theorem_bound(tag, N, purity=t.is_pure)
    return make_report(config_id, tag, p, attack, bound, t0)


def _custom_dim(spec) -> int | None:
    if isinstance(spec, dict) and isinstance(spec.get("amplitudes"), list):
        return len(spec["amplitudes"])
    if isinstance(spec, dict) and isinstance(spec.get("matrix"), list):
        m = spec["matrix"]
        return len(m) if m and isinstance(m[0], list) and len(m[0]) == len(m) else math.isqrt(len(m))
    return None


def _custom_state(spec, d: int, where: str) -> np.ndarray:
    """``{"amplitudes": [...]}`` for a pure source state or ``{"matrix": ...}`` for a mixed one."""
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object with amplitudes or matrix")
    if "amplitudes" in spec:
        v = _cplx_list(spec["amplitudes"], f"{where}.amplitudes")
        if v.size != d or np.linalg.norm(v) == 0:
            raise ConfigError(f"{where}.amplitudes: expected {d} entries, not all zero")
        v = v / np.linalg.norm(v)
        return np.outer(v, v.conj())
    if "matrix" in spec:
        return _matrix(spec["matrix"], d, f"{where}.matrix")
    raise ConfigError(f"{where}: expected amplitudes or matrix")


def load_config(text: str) -> dict:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("line 1: top level must be an object")
    for key in ("targets", "protocols", "attacks"):
        if key in cfg and not isinstance(cfg[key], list):
            raise ConfigError(f"{key}: expected a list")
    unknown = set(cfg) - {"targets", "protocols", "attacks", "theorems", "seed"}
    if unknown:
        raise ConfigError(f"unknown top-level field(s): {sorted(unknown)}")
    for k, tag in enumerate(cfg.get("theorems", [])):
        if tag not in TAGS:
            raise ConfigError(f"theorems[{k}]: unknown tag {tag!r}")
    return cfg


def expand(cfg: dict) -> list[tuple]:
    """Grid points ``(config_id, target spec, protocol spec, attack spec, path)``."""
    out = []
    for ti, tspec in enumerate(cfg.get("targets", [])):
        for pi, pspec in enumerate(cfg.get("protocols", [])):
            variants = _protocol_variants(pspec, f"protocols[{pi}]")
            for ni, var in enumerate(variants):
                for ai, aspec in enumerate(cfg.get("attacks", [])):
                    out.append((f"t{ti}.p{pi}.n{ni}.a{ai}", tspec, var, aspec,
                                (f"targets[{ti}]", f"protocols[{pi}]", f"attacks[{ai}]")))
    return out


def _run_point(task):
    cid, tspec, pspec, aspec, (tw, pw, aw), tags = task
    t = build_target(tspec, tw)
    p = build_protocol(pspec, t, pw)
    res = evaluate(cid, t, p, aspec, aw)
    if isinstance(res, VerificationReport) and tags and res.theorem not in tags:
        return Skipped(cid, f"theorem {res.theorem} not selected")
    return res


def run_sweep_detailed(cfg, jobs: int = 1) -> tuple[list[VerificationReport], list[Skipped]]:
    if isinstance(cfg, (str, bytes)):
        cfg = load_config(cfg if isinstance(cfg, str) else cfg.decode())
    tags = tuple(cfg.get("theorems", ()))
    tasks = [pt + (tags,) for pt in expand(cfg)]
    # validate every point up front so errors carry their field path
    for cid, tspec, pspec, aspec, (tw, pw, aw), _ in tasks:
        t = build_target(tspec, tw)
        build_protocol(pspec, t, pw)
        if not (isinstance(aspec, str) and aspec in ("pure-tau", "mixed-alpha", "depolarized", "measurement")) \
                and not (isinstance(aspec, dict) and "custom" in aspec):
            raise ConfigError(f"{aw}: unknown attack {aspec!r}")
        if isinstance(aspec, dict) and _custom_dim(aspec["custom"]) in (None, t.d):
            _custom_state(aspec["custom"], t.d, f"{aw}.custom")
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_point, tasks))
    else:
        results = [_run_point(t) for t in tasks]
    reports = [r for r in results if isinstance(r, VerificationReport)]
    skipped = [r for r in results if isinstance(r, Skipped)]
    for s in skipped:
        log.warning("skipped %s: %s", s.config_id, s.reason)
    order = {pt[0]: k for k, pt in enumerate(tasks)}
    reports.sort(key=lambda r: order[r.config_id])
    return reports, skipped


def run_sweep(cfg, jobs: int = 1) -> list[VerificationReport]:
    """Reports for the Cartesian grid of targets × protocols × attacks, in grid order."""
    return run_sweep_detailed(cfg, jobs)[0]


def all_passed(reports) -> bool:
    return all(r.passed for r in reports)
