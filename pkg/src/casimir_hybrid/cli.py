"""Scenario runner: JSON configs in, CSV tables and JSON reports out.

    python3 -m casimir_hybrid run --config configs/single_photon_crossing.json --out results/
    python3 -m casimir_hybrid converge --config ... --quantity splitting --ladder 4,4 6,6 8,8
    python3 -m casimir_hybrid compare-rates --config configs/single_photon_rates.json

Output directory and thread count fall back to CASIMIR_HYBRID_OUT and
CASIMIR_HYBRID_THREADS when the flags are absent.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigParseError, HybridError, MissingObservable, SingularDenominator, ValidationError
from .lindblad import (
    Schedule,
    cw_steady_state,
    evolve,
    evolve_rotating,
    frequency_conversion_protocol,
    joint_excitation_check,
    pulse_for_splitting,
    spectrum_of,
)
from .models import DriveSpec, LossRates, ModelKind, ModelParams, bare_hamiltonian, model_space, transformed_hamiltonian
from .perturb import (
    RABI_METHODS,
    rate_freq_conversion,
    rate_g10_e01,
    rate_g20_e01,
    rate_rabi_comparison,
    rate_two_atom,
)
from .spectra import find_min_splitting, locate_min_splitting, sweep

SCENARIOS = ("spectrum", "crossing", "perturb_compare", "dynamics", "freq_conversion", "joint_excitation")
ENV_OUT = "CASIMIR_HYBRID_OUT"
ENV_THREADS = "CASIMIR_HYBRID_THREADS"
KIND_ALIASES = {
    "single_atom": ModelKind.SINGLE,
    "two_modes": ModelKind.TWO_MODES,
    "two_atoms": ModelKind.TWO_ATOMS,
    **{k.value: k for k in ModelKind},
}
REQUIRED = {
    "spectrum": ("axis", "grid", "n_levels"),
    "crossing": ("axis", "level_pair"),
    "perturb_compare": ("axis", "level_pair"),
    "dynamics": ("t_grid",),
    "freq_conversion": ("t_grid",),
    "joint_excitation": ("t_grid",),
}
FORMULAS = {
    "g10_e01": lambda p: rate_g10_e01(p),
    "g20_e01": lambda p: rate_g20_e01(p),
    "freq_conversion": lambda p: rate_freq_conversion(p),
    "two_atom": lambda p: rate_two_atom(p),
    **{m: (lambda p, m=m: rate_rabi_comparison(p, m)) for m in RABI_METHODS},
}


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario description; all frequencies and rates in units of omega_m."""

    scenario: str
    model: dict
    numerics: dict = field(default_factory=dict)
    drive: dict | None = None
    losses: dict | None = None
    schedule: dict | None = None
    compare: dict | None = None
    output: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def params(self) -> ModelParams:
        m = dict(self.model)
        try:
            kind = KIND_ALIASES[m.pop("kind")]
        except KeyError as exc:
            raise ValidationError(f"model.kind must be one of {sorted(KIND_ALIASES)}") from exc
        cut = self.numerics.get("cutoffs", ())
        try:
            return ModelParams(kind, m.pop("omega_c"), m.pop("omega_a"), m.pop("g"), m.pop("lam"), tuple(cut), m.pop("omega_m", 1.0))
        except KeyError as exc:
            raise ValidationError(f"model is missing field {exc.args[0]!r}") from exc
        except TypeError as exc:
            raise ValidationError(f"model: {exc}") from exc

    def with_cutoffs(self, cutoffs) -> "ScenarioConfig":
        num = dict(self.numerics, cutoffs=[int(c) for c in cutoffs])
        return ScenarioConfig(**{**self.__dict__, "numerics": num})


def parse_config(text: str, source: str = "<config>") -> ScenarioConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigParseError(f"{source}: top level must be a JSON object")
    unknown = set(raw) - set(ScenarioConfig.__dataclass_fields__)
    if unknown:
        raise ConfigParseError(f"{source}: unknown field(s) {sorted(unknown)}")
    for name in ("scenario", "model"):
        if name not in raw:
            raise ConfigParseError(f"{source}: missing field {name!r}")
    cfg = ScenarioConfig(**raw)
    validate(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"{path}: {exc.strerror}") from exc
    return parse_config(text, str(path))


def validate(cfg: ScenarioConfig):
    if cfg.scenario not in SCENARIOS:
        raise ValidationError(f"scenario must be one of {SCENARIOS}, got {cfg.scenario!r}")
    p = cfg.params()
    model_space(p)
    missing = [k for k in REQUIRED[cfg.scenario] if k not in cfg.numerics]
    if missing:
        raise ValidationError(f"numerics is missing {missing} for scenario {cfg.scenario!r}")
    if cfg.scenario == "perturb_compare" and not (cfg.compare and cfg.compare.get("formulas") and cfg.compare.get("g_grid")):
        raise ValidationError("perturb_compare needs compare.formulas and compare.g_grid")
    if cfg.compare:
        bad = [f for f in cfg.compare.get("formulas", []) if f not in FORMULAS]
        if bad:
            raise ValidationError(f"unknown formula(s) {bad}; choose from {sorted(FORMULAS)}")
    if cfg.drive is not None:
        _drive(cfg.drive, None)
    if cfg.losses is not None:
        _losses(cfg.losses, p)


def _grid(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
    return np.asarray(spec, dtype=float)


def _losses(spec: dict, p: ModelParams) -> LossRates:
    if "uniform" in spec:
        return LossRates.uniform(float(spec["uniform"]), p)
    return LossRates(spec.get("kappa", 0.0), float(spec.get("gamma", 0.0)), spec.get("eta", 0.0))


def _drive(spec: dict, splitting: float | None) -> DriveSpec | None:
    kind = spec.get("kind", "CW")
    A = float(spec["A"])
    if spec.get("A_units") == "pi":
        A *= math.pi
    if kind == "CW":
        return DriveSpec.cw(A, float(spec.get("omega_d", 1.0)))
    norm = spec.get("normalization", "area")
    if "sigma" in spec:
        return DriveSpec.pulse(A, float(spec["sigma"]), float(spec["t0"]), float(spec.get("omega_d", 1.0)), norm)
    if splitting is None:
        return DriveSpec.pulse(A, 1.0, 0.0, float(spec.get("omega_d", 1.0)), norm)  # placeholder for validation
    return pulse_for_splitting(splitting, A, width_factor=float(spec.get("width_factor", 15.0)),
                               omega_d=float(spec.get("omega_d", 1.0)), normalization=norm)


@dataclass
class ScenarioResult:
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)
    report: dict = field(default_factory=dict)
    scalars: dict[str, float] = field(default_factory=dict)


def _hamiltonian(num: dict):
    if num.get("hamiltonian", "bare") == "transformed":
        order = int(num.get("series_order", 3))
        return lambda p, space=None: transformed_hamiltonian(p, space, order)
    return bare_hamiltonian


def _crossing(p: ModelParams, num: dict):
    """Crossing from numerics: either a tight `bracket` or a wide `span` searched globally first."""
    pair = tuple(num["level_pair"])
    kw = {"hamiltonian": _hamiltonian(num)}
    if "bracket" in num:
        return find_min_splitting(p, num["axis"], num["bracket"], pair, **kw)
    if "span" in num:
        return locate_min_splitting(p, num["axis"], num["span"], pair, points=int(num.get("coarse_points", 201)), **kw)
    raise ValidationError("crossing needs numerics.bracket or numerics.span")


def run_scenario(cfg: ScenarioConfig, threads: int | None = None) -> ScenarioResult:
    p = cfg.params()
    num = cfg.numerics
    res = ScenarioResult()
    if cfg.scenario == "spectrum":
        sw = sweep(p, num["axis"], _grid(num["grid"]), int(num["n_levels"]), hamiltonian=_hamiltonian(num), threads=threads)
        header = [sw.axis_name] + [f"level_{i}" for i in range(sw.tracked_levels.shape[0])]
        res.tables["spectrum"] = (header, [[x, *sw.tracked_levels[:, j]] for j, x in enumerate(sw.axis_values)])
        res.scalars.update({f"level_{i}_last": float(v) for i, v in enumerate(sw.tracked_levels[:, -1])})
        res.scalars["min_overlap"] = float(sw.overlap_continuity.min())
    elif cfg.scenario == "crossing":
        rep = _crossing(p, num)
        res.tables["crossing"] = (
            ["axis_value_at_min", "splitting", "energy_lower", "energy_upper", "resonance_order"],
            [[rep.axis_value_at_min, rep.splitting, *rep.energies, rep.resonance_order]],
        )
        res.report = _report_dict(rep)
        res.scalars.update(splitting=rep.splitting, axis_value_at_min=rep.axis_value_at_min)
    elif cfg.scenario == "perturb_compare":
        header, rows = compare_rates_table(cfg)
        res.tables["compare_rates"] = (header, rows)
        res.scalars["max_numeric_splitting"] = float(max(r[2] for r in rows))
    elif cfg.scenario in ("dynamics", "joint_excitation"):
        res = _run_dynamics(cfg, p)
    elif cfg.scenario == "freq_conversion":
        run = frequency_conversion_protocol(
            p, _losses(cfg.losses, p) if cfg.losses else None, float(num.get("delta_omega_a", 0.18)), _grid(num["t_grid"]),
            t_on=float(num.get("t_on", 200.0)), resonance_bracket=num.get("resonance_bracket", (0.33, 0.345)),
            level_pair=tuple(num.get("level_pair", (5, 6))), loss_per_omega=num.get("loss_per_omega"),
            energy_window=num.get("energy_window", 1.3), hold_detuned=bool(num.get("hold_detuned", False)),
        )
        _trajectory_outputs(res, run.trajectory)
        res.report.update(omega_a_resonant=run.omega_a_resonant, splitting=run.splitting,
                          schedule=[list(s) for s in run.schedule.segments])
        res.scalars.update(splitting=run.splitting)
    return res


def _run_dynamics(cfg: ScenarioConfig, p: ModelParams) -> ScenarioResult:
    num = cfg.numerics
    res = ScenarioResult()
    losses = _losses(cfg.losses or {"uniform": 0.0}, p)
    splitting = None
    if "crossing" in num:
        rep = _crossing(p, num["crossing"])
        p = p.with_value(num["crossing"]["axis"], rep.axis_value_at_min)
        splitting = rep.splitting
        res.report["crossing"] = _report_dict(rep)
        res.scalars["splitting"] = splitting
    drive = _drive(cfg.drive, splitting) if cfg.drive else None
    schedule = None
    if cfg.schedule:
        schedule = Schedule(cfg.schedule["parameter"], tuple(tuple(s) for s in cfg.schedule["segments"]))
    window = num.get("energy_window")
    initial = num.get("initial", "ground")
    t = _grid(num["t_grid"])
    if num.get("frame") == "rotating":
        traj = evolve_rotating(p, losses, drive, initial, t, energy_window=window)
        ss = cw_steady_state(p, losses, drive, energy_window=window)
        res.report["steady_state"] = ss.observables
        res.scalars.update({f"steady_{k}": v for k, v in ss.observables.items()})
    else:
        traj = evolve(p, losses, drive, schedule, initial, t, energy_window=window)
    _trajectory_outputs(res, traj)
    if "fft" in num:
        f = num["fft"]
        sp = spectrum_of(traj, f.get("observable", "mean_atom"), tuple(f["window"]) if "window" in f else None,
                         detrend=f.get("detrend", "mean"), hann=bool(f.get("hann", False)))
        res.tables["fft"] = (["frequency", "magnitude"], [[a, b] for a, b in zip(sp.frequencies, sp.magnitudes)])
        res.report["fft_peaks"] = sp.peaks
        res.report["fft_resolution"] = sp.resolution
        if sp.peaks:
            res.scalars["fft_dominant"] = sp.dominant
    if cfg.scenario == "joint_excitation":
        jr = joint_excitation_check(traj, float(num.get("tolerance", 0.05)))
        res.report["joint_excitation"] = {"max_deviation": jr.max_deviation, "max_excitation": jr.max_excitation,
                                          "passed": jr.passed}
        res.scalars["joint_max_deviation"] = max(jr.max_deviation)
    return res


def _trajectory_outputs(res: ScenarioResult, traj):
    names = sorted(traj.observables)
    rows = [[t, *(traj.observables[n][k] for n in names), traj.trace_deviation[k]] for k, t in enumerate(traj.times)]
    res.tables["trajectory"] = (["time", *names, "trace_deviation"], rows)
    res.report.update(final_rho_digest=traj.final_rho_digest, min_eigenvalue=traj.min_eigenvalue,
                      max_hermiticity=traj.max_hermiticity, projection_loss=traj.projection_loss,
                      max_trace_deviation=float(np.max(np.abs(traj.trace_deviation))))
    for n in names:
        res.scalars[f"max_{n}"] = float(np.max(traj.observables[n]))
        res.scalars[f"final_{n}"] = float(traj.observables[n][-1])


def _report_dict(rep) -> dict:
    return {
        "level_pair": list(rep.level_pair),
        "axis_name": rep.axis_name,
        "axis_value_at_min": rep.axis_value_at_min,
        "splitting": rep.splitting,
        "energies": list(rep.energies),
        "resonance_order": rep.resonance_order,
        "state_composition": [[[lab, [amp.real, amp.imag]] for lab, amp in side] for side in rep.state_composition],
    }


def compare_rates_table(cfg: ScenarioConfig) -> tuple[list[str], list[list]]:
    """Numeric 2*Omega against each requested closed form over compare.g_grid."""
    p0 = cfg.params()
    num, cmp_ = cfg.numerics, cfg.compare
    formulas = list(cmp_["formulas"])
    header = ["g", "axis_value_at_min", "numeric_splitting"]
    for f in formulas:
        header += [f"{f}_splitting", f"{f}_relative_error"]
    rows = []
    spans = cmp_.get("spans")
    for i, g in enumerate(cmp_["g_grid"]):
        p = p0.with_value("g", float(g))
        local = dict(num)
        if spans:
            local["span"] = spans[i]
            local.pop("bracket", None)
        rep = _crossing(p, local)
        q = p.with_value(num["axis"], rep.axis_value_at_min)
        row = [float(g), rep.axis_value_at_min, rep.splitting]
        for f in formulas:
            try:
                val = FORMULAS[f](q).splitting
                err = (val - rep.splitting) / rep.splitting if rep.splitting > 0 else math.nan
                row += [val, err]
            except SingularDenominator:
                row += ["singular", "singular"]
        rows.append(row)
    return header, rows


# --- output ------------------------------------------------------------------------


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows, digest: str) -> str:
    buf = io.StringIO()
    buf.write(f"# config_digest={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(fmt(obj)) if math.isfinite(obj) else str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def json_text(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


@dataclass
class RunManifest:
    config_digest: str
    code_version: str
    wall_time: float
    scenario: str
    convergence: list | None = None
    outputs: list[str] = field(default_factory=list)
    seed: int | None = None
    threads: int | None = None


def write_outputs(cfg: ScenarioConfig, res: ScenarioResult, out: Path, stem: str) -> list[str]:
    files = []
    for name, (header, rows) in res.tables.items():
        path = out / f"{stem}_{name}.csv"
        atomic_write(path, csv_text(header, rows, cfg.digest()))
        files.append(path.name)
    if res.report:
        path = out / f"{stem}_report.json"
        atomic_write(path, json_text(res.report))
        files.append(path.name)
    return files


def write_manifest(out: Path, stem: str, manifest: RunManifest):
    atomic_write(out / f"{stem}_manifest.json", json_text(asdict(manifest)))


def converge_table(cfg: ScenarioConfig, quantity: str, ladder, threads=None) -> tuple[list[list], bool]:
    """Rerun at each cutoff set; rows are (cutoffs, value, relative change from the previous rung)."""
    rows, prev = [], None
    for cut in ladder:
        val = run_scenario(cfg.with_cutoffs(cut), threads).scalars
        if quantity not in val:
            raise MissingObservable(f"scenario {cfg.scenario!r} has no scalar {quantity!r}; available {sorted(val)}")
        v = val[quantity]
        change = math.nan if prev is None else abs(v - prev) / max(abs(prev), 1e-300)
        rows.append([" ".join(str(c) for c in cut), v, change])
        prev = v
    final = rows[-1][2]
    converged = len(rows) > 1 and final < 0.01
    return rows, converged


# --- entry point -------------------------------------------------------------------


def _parse_ladder(items) -> list[tuple[int, ...]]:
    try:
        return [tuple(int(c) for c in s.split(",")) for s in items]
    except ValueError as exc:
        raise ValidationError(f"cutoff ladder entries look like 6,6: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="casimir-hybrid", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "converge", "compare-rates"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.add_argument("--threads", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None, help="reserved; all algorithms are deterministic")
        if name == "converge":
            sp.add_argument("--quantity", default="splitting")
            sp.add_argument("--ladder", nargs="+", default=None, help="cutoff sets such as 4,4 6,6 8,8")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out or os.environ.get(ENV_OUT) or ".")
    threads = args.threads or (int(os.environ[ENV_THREADS]) if os.environ.get(ENV_THREADS) else None)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        stem = cfg.output.get("path") or Path(args.config).stem
        manifest = RunManifest(cfg.digest(), __version__, 0.0, cfg.scenario, seed=args.seed, threads=threads)
        status = 0
        if args.command == "run":
            res = run_scenario(cfg, threads)
            manifest.outputs = write_outputs(cfg, res, out, stem)
        elif args.command == "compare-rates":
            if cfg.scenario != "perturb_compare":
                raise ValidationError("compare-rates needs a perturb_compare config")
            header, rows = compare_rates_table(cfg)
            path = out / f"{stem}_compare_rates.csv"
            atomic_write(path, csv_text(header, rows, cfg.digest()))
            manifest.outputs = [path.name]
        else:
            ladder = _parse_ladder(args.ladder) if args.ladder else [tuple(c) for c in cfg.numerics.get("cutoff_ladder", [])]
            if len(ladder) < 2:
                raise ValidationError("converge needs at least two cutoff sets (--ladder or numerics.cutoff_ladder)")
            rows, ok = converge_table(cfg, args.quantity, ladder, threads)
            path = out / f"{stem}_convergence.csv"
            atomic_write(path, csv_text(["cutoffs", args.quantity, "relative_change"], rows, cfg.digest()))
            manifest.outputs = [path.name]
            manifest.convergence = [{"cutoffs": r[0], "value": r[1], "relative_change": r[2], "converged": ok}
                                    for r in rows]
            status = 0 if ok else 1
            if not ok:
                print(f"not converged: final relative change {rows[-1][2]:.3e} >= 1%", file=sys.stderr)
        manifest.wall_time = time.perf_counter() - start
        write_manifest(out, stem, manifest)
        return status
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HybridError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
