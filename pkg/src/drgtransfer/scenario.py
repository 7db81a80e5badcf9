"""Scenario configs, fidelity sweeps, trace files and the verification table."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import drg, dynamics, hamiltonian, spectra
from .errors import TransferError
from .plotting import emit_svg

log = logging.getLogger(__name__)

FAMILIES = ("cycle", "hypercube", "crown", "custom")
MIN_PARAM = {"cycle": 2, "hypercube": 1, "crown": 3}
SIG_DIGITS = 15


class ConfigError(ValueError):
    """Invalid scenario configuration (usage error)."""


@dataclass
class ScenarioConfig:
    family: str = "cycle"
    params: tuple[int, ...] = (2,)
    gamma_list: tuple[float, ...] = (0.1, 0.2, 0.3)
    #: ``auto`` | ``preset:<name>`` | ``solver[:<strategy>[:<t0>]]`` | ``explicit:<J0,J1,...>``
    couplings: str = "auto"
    t_max: float = 20.0
    dt: float = 0.01
    csv: Optional[str] = None
    svg: Optional[str] = None
    oracle: bool = False
    paper_normalization: bool = False
    custom: Optional[list[list[int]]] = None
    reference: int = 0
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.family == "custom":
            if not self.custom:
                raise ConfigError("family 'custom' needs a 'custom' adjacency list")
        elif not self.params:
            raise ConfigError("param list is empty")
        else:
            low = MIN_PARAM[self.family]
            if any(p < low for p in self.params):
                raise ConfigError(f"{self.family} needs param >= {low}, got {list(self.params)}")
        if not self.gamma_list:
            raise ConfigError("gamma list is empty")
        if any(not (g >= 0 and math.isfinite(g)) for g in self.gamma_list):
            raise ConfigError(f"gamma values must be finite and >= 0: {self.gamma_list}")
        if not (self.dt > 0 and self.t_max >= self.dt):
            raise ConfigError(f"need dt > 0 and t_max >= dt (dt={self.dt}, t_max={self.t_max})")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        parse_couplings(self.couplings)

    @classmethod
    def from_mapping(cls, doc: dict[str, Any]) -> "ScenarioConfig":
        doc = dict(doc)
        if "gamma" in doc:
            doc["gamma_list"] = doc.pop("gamma")
        if "param" in doc:
            doc["params"] = doc.pop("param")
        if isinstance(doc.get("couplings"), list):
            doc["couplings"] = "explicit:" + ",".join(repr(float(v)) for v in doc["couplings"])
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "params" in doc:
                p = doc["params"]
                doc["params"] = tuple(int(v) for v in (p if isinstance(p, list) else [p]))
            if "gamma_list" in doc:
                g = doc["gamma_list"]
                doc["gamma_list"] = tuple(float(v) for v in (g if isinstance(g, list) else [g]))
            for key in ("t_max", "dt"):
                if key in doc:
                    doc[key] = float(doc[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cls(**doc)

    @classmethod
    def from_json(cls, path: str | Path) -> "ScenarioConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_mapping(doc)


def parse_couplings(spec: str) -> tuple[str, Any]:
    """Split a couplings string into ``(kind, payload)``."""
    kind, _, rest = spec.partition(":")
    if kind == "auto" and not rest:
        return "auto", None
    if kind == "preset":
        if rest not in hamiltonian.PRESETS:
            raise ConfigError(f"unknown preset {rest!r}; choose from {sorted(hamiltonian.PRESETS)}")
        return "preset", rest
    if kind == "solver":
        strategy, _, t0 = rest.partition(":")
        if strategy and strategy not in ("ladder", "folded"):
            raise ConfigError(f"solver strategy must be ladder or folded, got {strategy!r}")
        try:
            t0_val = float(t0) if t0 else 1.0
        except ValueError:
            raise ConfigError(f"bad transfer time {t0!r}") from None
        if not t0_val > 0:
            raise ConfigError("transfer time must be positive")
        return "solver", (strategy or None, t0_val)
    if kind == "explicit":
        try:
            return "explicit", tuple(float(v) for v in rest.split(","))
        except ValueError:
            raise ConfigError(f"bad explicit couplings {rest!r}") from None
    raise ConfigError(f"cannot parse couplings {spec!r}")


# ---------------------------------------------------------------------------
# Network instances


@dataclass(eq=False)
class Instance:
    family: str
    param: Optional[int]
    jacobi: drg.JacobiParams
    spectrum: spectra.Spectrum
    couplings: np.ndarray
    energies: np.ndarray
    transfer_time: float
    graph: Optional[drg.FullGraph] = None

    @property
    def label(self) -> str:
        return self.family if self.param is None else f"{self.family}-{self.param}"


def _default_preset(family: str, param: int) -> Optional[str]:
    for name, (fam, size, _) in hamiltonian.PRESETS.items():
        if fam == family and size in (None, param):
            return name
    return None


def build_instance(
    family: str,
    param: Optional[int],
    couplings: str = "auto",
    custom: Optional[list[list[int]]] = None,
    reference: int = 0,
    with_graph: bool = False,
) -> Instance:
    graph = None
    if family == "custom":
        graph = drg.from_adjacency_list(custom, reference)
        _, jp, _ = drg.stratify(graph)
    else:
        jp = drg.family_jacobi(family, param)
        if with_graph:
            graph = drg.BUILDERS[family](param)
    spec = spectra.spectrum(jp)

    kind, payload = parse_couplings(couplings)
    t0 = 1.0
    if kind == "auto":
        preset = _default_preset(family, param) if family != "custom" else None
        if preset:
            kind, payload = "preset", preset
        else:
            kind, payload = "solver", (None, 1.0)
    if kind == "preset":
        j = hamiltonian.preset_couplings(payload, family, param)
    elif kind == "solver":
        strategy, t0 = payload
        strategy = strategy or hamiltonian.DEFAULT_STRATEGY.get(family, "ladder")
        j = hamiltonian.solve_couplings(spec, hamiltonian.PstTarget(t0, strategy))
    else:
        j = np.array(payload)
    e = hamiltonian.energies(j, spec)
    return Instance(family, param, jp, spec, j, e, t0, graph)


# ---------------------------------------------------------------------------
# Simulation


@dataclass
class TraceSummary:
    label: str
    gamma: float
    steady: float
    peak_time: float
    peak_fidelity: float
    transfer_fidelity: float
    oracle_deviation: Optional[float] = None


@dataclass
class ScenarioResult:
    label: str
    instance: Optional[Instance] = None
    traces: list[dynamics.FidelityTrace] = field(default_factory=list)
    summaries: list[TraceSummary] = field(default_factory=list)
    error: Optional[str] = None
    files: list[Path] = field(default_factory=list)


def _simulate_one(cfg: ScenarioConfig, param: Optional[int]) -> ScenarioResult:
    label = cfg.family if param is None else f"{cfg.family}-{param}"
    try:
        inst = build_instance(
            cfg.family, param, cfg.couplings, cfg.custom, cfg.reference, with_graph=False
        )
    except TransferError as exc:
        log.warning("%s: %s", label, exc)
        return ScenarioResult(label, error=f"{type(exc).__name__}: {exc}")

    times = dynamics.time_grid(cfg.t_max, cfg.dt)
    graph = None
    if cfg.oracle:
        try:
            graph = inst.graph or (
                drg.from_adjacency_list(cfg.custom, cfg.reference)
                if cfg.family == "custom"
                else drg.BUILDERS[cfg.family](param, max_vertices=dynamics.ORACLE_CAP)
            )
        except TransferError as exc:
            log.warning("%s: oracle skipped (%s)", label, exc)

    result = ScenarioResult(inst.label, inst)
    for gamma in cfg.gamma_list:
        tr = dynamics.fidelity_trace(
            inst.energies, inst.spectrum, gamma, times, inst.label, cfg.paper_normalization
        )
        t_peak, f_peak = tr.first_peak()
        f_t0 = dynamics.fidelity(
            inst.energies, inst.spectrum, gamma, inst.transfer_time, cfg.paper_normalization
        )
        dev = None
        if graph is not None:
            full = dynamics.full_space_oracle(graph, inst.couplings, gamma, times)
            dev = float(np.max(np.abs(full - tr.fidelities)))
        result.traces.append(tr)
        result.summaries.append(
            TraceSummary(inst.label, gamma, tr.steady, t_peak, f_peak, f_t0, dev)
        )
    return result


def fmt(x: float) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def trace_csv(traces: Sequence[dynamics.FidelityTrace]) -> str:
    """Wide CSV ``t,F_g<gamma>...``; a single trace gets header ``t,F``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if len(traces) == 1:
        w.writerow(["t", "F"])
    else:
        w.writerow(["t"] + [f"F_g{tr.gamma:g}" for tr in traces])
    times = traces[0].times
    for i, t in enumerate(times):
        w.writerow([fmt(t)] + [fmt(tr.fidelities[i]) for tr in traces])
    return buf.getvalue()


def read_trace_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


SUMMARY_HEADER = [
    "label", "gamma", "steady", "peak_t", "peak_F", "F_t0", "oracle_dev",
]


def summary_rows(results: Sequence[ScenarioResult]) -> list[list[str]]:
    rows = []
    for res in results:
        if res.error:
            rows.append([res.label, "", "", "", "", "", res.error])
            continue
        for s in res.summaries:
            rows.append([
                s.label, f"{s.gamma:g}", fmt(s.steady), fmt(s.peak_time), fmt(s.peak_fidelity),
                fmt(s.transfer_fidelity), "" if s.oracle_deviation is None else f"{s.oracle_deviation:.3e}",
            ])
    return rows


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def run_scenario(cfg: ScenarioConfig) -> list[ScenarioResult]:
    """Run every ``(instance, gamma)`` of ``cfg`` and write the requested files."""
    params: list[Optional[int]] = [None] if cfg.family == "custom" else list(cfg.params)
    if cfg.jobs > 1 and len(params) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(lambda p: _simulate_one(cfg, p), params))
    else:
        results = [_simulate_one(cfg, p) for p in params]

    ok = [r for r in results if r.error is None]
    if cfg.csv:
        out = Path(cfg.csv)
        for res in ok:
            res.files.append(_write(out / f"{res.label}.csv", trace_csv(res.traces)))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        w.writerows(summary_rows(results))
        _write(out / "summary.csv", buf.getvalue())
    if cfg.svg:
        out = Path(cfg.svg)
        for res in ok:
            res.files.append(_write(out / f"{res.label}.svg", emit_svg(res.traces, title=res.label)))
        if len(ok) > 1:
            for gi, gamma in enumerate(cfg.gamma_list):
                traces = [res.traces[gi] for res in ok]
                svg = emit_svg(traces, [res.label for res in ok], title=f"{cfg.family}, γ={gamma:g}")
                _write(out / f"{cfg.family}-sweep-g{gamma:g}.svg", svg)
    return results


# ---------------------------------------------------------------------------
# Verification


@dataclass
class Check:
    name: str
    ok: bool
    value: float = float("nan")
    tol: float = float("nan")
    detail: str = ""


ORACLE_T_MAX = 20.0
ORACLE_DT = 0.01


def _check(name: str, value: float, tol: float, detail: str = "") -> Check:
    return Check(name, bool(value <= tol), float(value), tol, detail)


def _guard(name: str, fn: Callable[[], list[Check]]) -> list[Check]:
    try:
        return fn()
    except TransferError as exc:
        return [Check(name, False, detail=f"{type(exc).__name__}: {exc}")]


def graph_checks(g: drg.FullGraph) -> list[Check]:
    """Distance-regularity, stratification and Krylov-basis identities."""
    checks = []
    rep = drg.check_distance_regularity(g)
    checks.append(Check(
        "distance-regularity", rep.consistent,
        detail="" if rep.consistent else f"p^k_ij not constant at (k,i,j)={rep.violation}",
    ))

    def krylov() -> list[Check]:
        strat, jp, dm = drg.stratify(g)
        n = g.n_vertices
        phis = np.zeros((jp.d + 1, n))
        for i, layer in enumerate(strat.strata):
            phis[i, layer] = 1.0 / math.sqrt(len(layer))
        res = float(np.max(np.abs((g.adjacency @ phis.T).T - jp.matrix() @ phis)))
        ai = max(
            float(np.max(np.abs(dm.matrix(i) @ phis[0] - math.sqrt(jp.kappa[i]) * phis[i])))
            for i in range(jp.d + 1)
        )
        return [
            _check("three-term recursion on strata", res, 1e-12),
            _check("A_i phi_0 = sqrt(kappa_i) phi_i", ai, 1e-12),
        ]

    checks += _guard("stratify", krylov)
    return checks


def spectral_checks(inst: Instance, g: Optional[drg.FullGraph]) -> list[Check]:
    sp = inst.spectrum
    jp = inst.jacobi
    d = jp.d
    checks = [
        _check("weights sum to 1", abs(float(np.sum(sp.weights)) - 1.0), 1e-12),
        Check("weights positive", bool(np.all(sp.weights > 0))),
        _check(
            "P_d(x_k) = (-1)^k",
            float(np.max(np.abs(sp.p_vals[-1] - (-1.0) ** np.arange(d + 1)))),
            1e-9,
        ),
        _check(
            "tridiagonal eigenvalues vs Q_(d+1) roots",
            float(np.max(np.abs(sp.eigenvalues - spectra.characteristic_roots(sp.poly)))),
            1e-9,
        ),
    ]
    v = sp.eigenvectors
    resid = float(np.max(np.linalg.norm(jp.matrix() @ v - v * sp.eigenvalues, axis=0)))
    checks.append(_check("eigenvector residual", resid, 1e-10))
    if g is not None:
        mom = spectra.moments_check(sp, g, 2 * d)
        checks.append(_check("moments vs closed walks (m <= 2d)", mom.max_rel_error, 1e-9))
    return checks


def _density_errors(rhos: np.ndarray) -> tuple[float, float]:
    """Worst trace/Hermiticity error and worst negative eigenvalue over a stack."""
    trace = float(np.max(np.abs(np.trace(rhos, axis1=1, axis2=2) - 1.0)))
    herm = float(np.max(np.abs(rhos - np.conj(np.swapaxes(rhos, 1, 2)))))
    sym = 0.5 * (rhos + np.conj(np.swapaxes(rhos, 1, 2)))
    neg = -float(np.min(np.linalg.eigvalsh(sym)))
    return max(trace, herm), max(neg, 0.0)


def dynamics_checks(
    inst: Instance,
    g: Optional[drg.FullGraph],
    gammas: Sequence[float],
    t_max: float = ORACLE_T_MAX,
    dt: float = ORACLE_DT,
) -> list[Check]:
    sp, e = inst.spectrum, inst.energies
    ok, res = hamiltonian.pst_check(e, inst.transfer_time)
    checks = [Check("PST phase condition", ok, res, hamiltonian.PST_TOL)]
    f_pst = dynamics.fidelity(e, sp, 0.0, inst.transfer_time)
    checks.append(_check("F(t0) = 1 at gamma = 0", abs(f_pst - 1.0), 1e-9))
    times = dynamics.time_grid(t_max, dt)
    for gamma in gammas:
        tag = f" [γ={gamma:g}]"
        closed = dynamics.closed_form_trajectory(e, sp, gamma, times)
        traj = np.stack([s.rho for s in dynamics.integrate_master_equation(e, sp, gamma, t_max, dt)])
        checks.append(_check("closed form vs RK4" + tag, float(np.max(np.abs(closed - traj))), 1e-6))
        kraus = dynamics.kraus_trajectory(e, sp, gamma, times)
        checks.append(_check("closed form vs Kraus sum" + tag, float(np.max(np.abs(closed - kraus))), 1e-10))
        l_max = dynamics.kraus_cutoff(e, gamma, t_max)
        comp = float(np.max(np.abs(dynamics.kraus_completeness(e, gamma, t_max, l_max) - np.eye(e.size))))
        checks.append(_check("Kraus completeness" + tag, comp, 1e-10))
        herm, neg = _density_errors(closed)
        checks.append(_check("trace 1 and Hermitian" + tag, herm, 1e-12))
        checks.append(_check("positive semidefinite" + tag, neg, 1e-10))
        f = dynamics.fidelity(e, sp, gamma, times)
        if g is not None:
            for const in (False, True):
                full = dynamics.full_space_oracle(g, inst.couplings, gamma, times, include_constant=const)
                name = "Krylov vs full-space fidelity" + (" (+const)" if const else "") + tag
                checks.append(_check(name, float(np.max(np.abs(full - f))), 1e-9))
    return checks


def verify(cfg: ScenarioConfig) -> list[Check]:
    """Run the full check table for every instance of ``cfg``."""
    checks: list[Check] = []
    params: list[Optional[int]] = [None] if cfg.family == "custom" else list(cfg.params)
    for param in params:
        prefix = cfg.family if param is None else f"{cfg.family}-{param}"
        try:
            if cfg.family == "custom":
                g = drg.from_adjacency_list(cfg.custom, cfg.reference)
            else:
                g = drg.BUILDERS[cfg.family](param, max_vertices=dynamics.ORACLE_CAP)
        except TransferError as exc:
            checks.append(Check(f"{prefix}: build graph", False, detail=str(exc)))
            continue
        local = graph_checks(g)
        if all(c.ok for c in local):
            try:
                inst = build_instance(cfg.family, param, cfg.couplings, cfg.custom, cfg.reference)
                local += spectral_checks(inst, g)
                local += dynamics_checks(inst, g, cfg.gamma_list)
            except TransferError as exc:
                local.append(Check("build instance", False, detail=f"{type(exc).__name__}: {exc}"))
        for c in local:
            c.name = f"{prefix}: {c.name}"
        checks += local
    return checks


def format_checks(checks: Sequence[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = []
    for c in checks:
        status = "PASS" if c.ok else "FAIL"
        val = "" if math.isnan(c.value) else f"{c.value:.3e}"
        tol = "" if math.isnan(c.tol) else f"<= {c.tol:.0e}"
        extra = f"  {c.detail}" if c.detail else ""
        lines.append(f"{status}  {c.name:<{width}}  {val:>10} {tol}{extra}".rstrip())
    return "\n".join(lines)
