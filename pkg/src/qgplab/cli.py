"""Command-line front end: scenario configs, condition reports, sweeps.

Subcommands
-----------
simulate    integrate the configured model and emit trajectory/fidelity CSVs
conditions  evaluate the adiabaticity criteria and emit a CSV + summary
figure1     reproduce the robust-model reference figure (Bloch curves, P)
sweep       grid-sweep up to three model parameters and tabulate verdicts

Configs are INI-style key = value sections ([model], [run], [conditions],
[output]).  Exit codes: 0 success, 2 config/usage error, 3 numerical error.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import sys
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics, reporting
from .conditions import condition_report
from .errors import ConfigError, NumericalError, QgplabError
from .evolve import evolve_schrodinger
from .frames import TimeGrid, adiabatic_trajectory, build_frame
from .linalg import SIGMA_X, SIGMA_Y, SIGMA_Z
from .models import (
    BlochCurveModel,
    FourierTerm,
    HamiltonianModel,
    RobustModelParams,
    RotatingSpinParams,
    SmoothScalar,
    bloch_curve,
    fourier_nlevel,
    robust_adiabatic_projector,
    robust_model,
    rotating_spin,
)

MIN_GRID = 64

_PAULI = {"sigma_x": SIGMA_X, "sigma_y": SIGMA_Y, "sigma_z": SIGMA_Z}


@dataclass
class ScenarioConfig:
    model_name: str
    model_params: dict
    tau_start: float = 0.0
    tau_end: float = 2.0 * np.pi
    samples: int = 4096
    level: int = 1
    tol: float = 1e-9
    delta: float = 0.1
    traditional_threshold: float = 0.1
    pairing: str = "conservative"
    out_dir: str = "out"
    outputs: tuple = ("trajectory", "fidelity", "conditions")
    sweep: dict = field(default_factory=dict)


def _get(section, key, cast, *, required=True, default=None, where=""):
    if key not in section:
        if required:
            raise ConfigError(f"missing field '{key}' in section [{where}]")
        return default
    raw = section[key]
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field '{key}' in [{where}]: cannot parse {raw!r}") from exc


def _parse_level(raw: str) -> int:
    aliases = {"upper": 1, "plus": 1, "+": 1, "lower": 0, "minus": 0, "-": 0}
    key = raw.strip().lower()
    if key in aliases:
        return aliases[key]
    return int(raw)


def _parse_scalar_descriptor(section, prefix: str, where: str) -> SmoothScalar:
    kind = _get(section, f"{prefix}_type", str, required=False, default="const", where=where)
    coeffs = [
        float(v)
        for v in _get(section, f"{prefix}_coeffs", str, where=where).split(",")
    ]
    kind = kind.strip().lower()
    if kind in ("const", "constant"):
        if len(coeffs) != 1:
            raise ConfigError(f"'{prefix}_coeffs' in [{where}]: constant wants one value")
        return SmoothScalar.constant(coeffs[0])
    if kind in ("poly", "polynomial"):
        return SmoothScalar.poly(coeffs)
    if kind in ("sin", "sinusoid"):
        if len(coeffs) not in (3, 4):
            raise ConfigError(
                f"'{prefix}_coeffs' in [{where}]: sinusoid wants offset,amplitude,omega[,phase]"
            )
        return SmoothScalar.sinusoid(*coeffs)
    raise ConfigError(f"'{prefix}_type' in [{where}]: unknown kind {kind!r}")


def parse_config(path: str) -> ScenarioConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    if "model" not in parser:
        raise ConfigError("missing section [model]")
    model_section = parser["model"]
    name = _get(model_section, "name", str, where="model").strip().lower()
    params = {k: v for k, v in model_section.items() if k != "name"}

    cfg = ScenarioConfig(model_name=name, model_params=params)
    if "run" in parser:
        run = parser["run"]
        cfg.tau_start = _get(run, "tau_start", float, required=False, default=cfg.tau_start, where="run")
        cfg.tau_end = _get(run, "tau_end", float, required=False, default=cfg.tau_end, where="run")
        cfg.samples = _get(run, "samples", int, required=False, default=cfg.samples, where="run")
        cfg.level = _get(run, "level", _parse_level, required=False, default=cfg.level, where="run")
        cfg.tol = _get(run, "tol", float, required=False, default=cfg.tol, where="run")
    if "conditions" in parser:
        cond = parser["conditions"]
        cfg.delta = _get(cond, "delta", float, required=False, default=cfg.delta, where="conditions")
        cfg.traditional_threshold = _get(
            cond, "traditional_threshold", float, required=False,
            default=cfg.traditional_threshold, where="conditions",
        )
        cfg.pairing = _get(cond, "pairing", str, required=False, default=cfg.pairing, where="conditions")
    if "output" in parser:
        out = parser["output"]
        cfg.out_dir = _get(out, "dir", str, required=False, default=cfg.out_dir, where="output")
        raw = _get(out, "outputs", str, required=False, default=None, where="output")
        if raw is not None:
            cfg.outputs = tuple(p.strip() for p in raw.split(",") if p.strip())
    if "sweep" in parser:
        cfg.sweep = {
            key: [float(v) for v in raw.split(",") if v.strip() != ""]
            for key, raw in parser["sweep"].items()
        }
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    if cfg.samples < MIN_GRID:
        raise ConfigError(f"field 'samples' in [run]: grid size {cfg.samples} < {MIN_GRID}")
    if not cfg.tau_end > cfg.tau_start:
        raise ConfigError("field 'tau_end' in [run]: must exceed tau_start")
    if not 0.0 < cfg.delta < 1.0:
        raise ConfigError("field 'delta' in [conditions]: must lie in (0, 1)")
    if cfg.pairing not in ("conservative", "strict"):
        raise ConfigError("field 'pairing' in [conditions]: conservative or strict")
    build_model(cfg)  # surfaces model-parameter errors at parse time


def build_model(cfg: ScenarioConfig) -> HamiltonianModel:
    params = cfg.model_params
    name = cfg.model_name

    def need(key, cast=float):
        if key not in params:
            raise ConfigError(f"missing field '{key}' in section [model] for {name}")
        try:
            return cast(params[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"field '{key}' in [model]: cannot parse {params[key]!r}") from exc

    try:
        if name == "rotating_spin":
            return rotating_spin(RotatingSpinParams(eta=need("eta"), xi=need("xi"), K=need("k")))
        if name == "robust":
            return robust_model(
                RobustModelParams(
                    eta=need("eta"), eta0=need("eta0"), eta1=need("eta1"), eta2=need("eta2")
                )
            )
        if name == "bloch_curve":
            curve = BlochCurveModel(
                theta=_parse_scalar_descriptor(params, "theta", "model"),
                phi=_parse_scalar_descriptor(params, "phi", "model"),
                A=SmoothScalar.constant(float(params.get("a", 0.0))),
                B=SmoothScalar.constant(float(params.get("b", 1.0))),
            )
            return bloch_curve(curve)
        if name == "fourier":
            import json

            dim = need("dim", int)
            terms = []
            for key in sorted(k for k in params if k.startswith("term")):
                term_spec = json.loads(params[key])
                matrix = term_spec["matrix"]
                if isinstance(matrix, str):
                    if matrix not in _PAULI:
                        raise ConfigError(
                            f"field '{key}' in [model]: unknown matrix name {matrix!r}"
                        )
                    matrix = _PAULI[matrix]
                else:
                    matrix = np.array(
                        [[complex(c[0], c[1]) if isinstance(c, list) else complex(c) for c in row]
                         for row in matrix]
                    )
                terms.append(
                    FourierTerm(
                        matrix=np.asarray(matrix, dtype=complex),
                        omega=float(term_spec.get("omega", 0.0)),
                        amplitude=float(term_spec.get("amplitude", 1.0)),
                        phase=float(term_spec.get("phase", 0.0)),
                    )
                )
            return fourier_nlevel(dim, terms)
    except QgplabError:
        raise
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"section [model]: {exc}") from exc
    raise ConfigError(f"field 'name' in [model]: unknown model {cfg.model_name!r}")


def _rotating_params(cfg: ScenarioConfig) -> RotatingSpinParams | None:
    if cfg.model_name != "rotating_spin":
        return None
    p = cfg.model_params
    return RotatingSpinParams(eta=float(p["eta"]), xi=float(p["xi"]), K=float(p["k"]))


def _run_simulation(cfg: ScenarioConfig):
    model = build_model(cfg)
    grid = TimeGrid.uniform(cfg.tau_start, cfg.tau_end, cfg.samples)
    frame = build_frame(model, grid)
    psi0 = frame.vectors[0, :, cfg.level].copy()
    result = evolve_schrodinger(model, psi0, grid, tol=cfg.tol)
    trajectory = adiabatic_trajectory(frame, cfg.level)
    fid = metrics.fidelity(result, trajectory)
    return model, grid, frame, result, fid


def cmd_simulate(cfg: ScenarioConfig) -> int:
    out = reporting.ensure_dir(cfg.out_dir)
    model, grid, frame, result, fid = _run_simulation(cfg)

    columns = [grid.samples]
    header = ["tau"]
    for n in range(model.dim):
        header += [f"re_a{n}", f"im_a{n}"]
        columns += [result.states[:, n].real, result.states[:, n].imag]
    header.append("norm")
    columns.append(result.norms)
    reporting.write_csv(f"{out}/trajectory.csv", header, columns)

    fid_header = ["tau", "F_simulated"]
    fid_columns = [grid.samples, fid.values]
    rot = _rotating_params(cfg)
    if rot is not None:
        fid_header.append("F_closed_form")
        fid_columns.append(np.asarray(metrics.closed_form_F(rot, grid.samples)))
    reporting.write_csv(f"{out}/fidelity.csv", fid_header, fid_columns)
    print(f"simulate: wrote {out}/trajectory.csv and {out}/fidelity.csv "
          f"(min F = {reporting.format_float(np.min(fid.values))})")
    return 0


def cmd_conditions(cfg: ScenarioConfig) -> int:
    out = reporting.ensure_dir(cfg.out_dir)
    model = build_model(cfg)
    grid = TimeGrid.uniform(cfg.tau_start, cfg.tau_end, cfg.samples)
    frame = build_frame(model, grid)
    report = condition_report(
        frame,
        cfg.level,
        delta_threshold=cfg.delta,
        traditional_threshold=cfg.traditional_threshold,
        pairing=cfg.pairing,
    )

    header = ["tau", "gap", "|gamma|", "delta_qgp", "traditional_ratio", "new_ratio"]
    multi = len(report.pairs) > 1
    for pair_series in report.pairs:
        ratio = (
            pair_series.new_ratio_conservative
            if cfg.pairing == "conservative"
            else pair_series.new_ratio_strict
        )
        columns = [
            grid.samples,
            pair_series.gap,
            pair_series.gamma_abs,
            pair_series.delta,
            pair_series.traditional_ratio,
            ratio,
        ]
        m, n = pair_series.pair
        name = f"conditions_m{m}_n{n}.csv" if multi else "conditions.csv"
        reporting.write_csv(f"{out}/{name}", header, columns)

    lines = [
        f"model: {report.model_label}",
        f"level: {report.level}",
        f"traditional: max ratio {reporting.format_float(report.max_traditional)} at "
        f"tau {reporting.format_float(report.tau_at_max_traditional)} "
        f"(threshold {reporting.format_float(report.traditional_threshold)}) -> "
        f"{'PASS' if report.traditional_pass else 'FAIL'}",
        f"new ({report.pairing}): max ratio {reporting.format_float(report.max_new)} at "
        f"tau {reporting.format_float(report.tau_at_max_new)} "
        f"(threshold {reporting.format_float(report.new_threshold)}) -> "
        f"{'PASS' if report.new_pass else 'FAIL'}",
        f"new (strict reading): max ratio {reporting.format_float(report.max_new_strict)}",
        f"new (conservative reading): max ratio "
        f"{reporting.format_float(report.max_new_conservative)}",
        f"predicted occupation floor (1-delta)^2: "
        f"{reporting.format_float(report.probability_floor)}",
    ]
    if "fidelity" in cfg.outputs or "trajectory" in cfg.outputs:
        _, _, _, result, fid = _run_simulation(cfg)
        occ = metrics.occupation(result, frame, cfg.level)
        lines.append(f"observed min fidelity: {reporting.format_float(np.min(fid.values))}")
        lines.append(f"observed min occupation: {reporting.format_float(np.min(occ.values))}")
    text = "\n".join(lines) + "\n"
    with open(f"{out}/summary.txt", "w", newline="\n") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def cmd_figure1(out_dir: str, samples: int = 4096, tol: float = 1e-6) -> int:
    out = reporting.ensure_dir(out_dir)
    params = RobustModelParams(eta=1.0, eta0=20.0, eta1=1.0, eta2=100.0)
    model = robust_model(params)
    grid = TimeGrid.uniform(0.0, 2.0 * np.pi, samples)
    frame = build_frame(model, grid, gamma_mode="analytic_derivative")

    rho0 = robust_adiabatic_projector(params, 0.0, +1)
    vals, vecs = np.linalg.eigh(rho0)
    psi0 = vecs[:, np.argmax(vals)]
    result = evolve_schrodinger(model, psi0, grid, tol=tol)

    evo = reporting.bloch_vector(result.states)
    adia = reporting.bloch_vector(frame.vectors[:, :, 1].copy())
    reporting.write_csv(
        f"{out}/bloch.csv",
        ["tau", "evo_x", "evo_y", "evo_z", "adia_x", "adia_y", "adia_z"],
        [grid.samples, evo[:, 0], evo[:, 1], evo[:, 2], adia[:, 0], adia[:, 1], adia[:, 2]],
    )

    occ = metrics.occupation(result, frame, 1)
    p_closed = np.asarray(metrics.closed_form_P(params, grid.samples))
    reporting.write_csv(
        f"{out}/P.csv", ["tau", "P_simulated", "P_closed_form"],
        [grid.samples, occ.values, p_closed],
    )

    floor = metrics.p_min(params)
    min_p = float(np.min(occ.values))
    if min_p < floor - 1e-6:
        raise NumericalError(
            f"min occupation {min_p:.9f} fell below the floor {floor:.9f}"
        )

    reporting.write_svg_curves(
        f"{out}/figure1.svg",
        [
            (reporting.project_isometric(evo), "red", 1.2, "evolution orbit"),
            (reporting.project_isometric(adia), "blue", 0.6, "adiabatic orbit"),
        ],
        title="robust model: evolution vs adiabatic orbit (Bloch projection)",
    )
    print(
        f"figure1: wrote {out}/bloch.csv, {out}/P.csv, {out}/figure1.svg "
        f"(min P = {reporting.format_float(min_p)}, floor = {reporting.format_float(floor)})"
    )
    return 0


def cmd_sweep(cfg: ScenarioConfig) -> int:
    if not cfg.sweep:
        raise ConfigError("missing section [sweep] (nothing to sweep)")
    if len(cfg.sweep) > 3:
        raise ConfigError(f"section [sweep]: at most 3 swept parameters, got {len(cfg.sweep)}")
    names = list(cfg.sweep.keys())
    grids = [cfg.sweep[name] for name in names]
    if any(len(g) == 0 for g in grids):
        empty = names[[len(g) for g in grids].index(0)]
        raise ConfigError(f"field '{empty}' in [sweep]: empty range")
    total = int(np.prod([len(g) for g in grids]))
    if total > 10_000:
        raise ConfigError(f"section [sweep]: {total} points exceed the 10000-point budget")

    out = reporting.ensure_dir(cfg.out_dir)
    rows = []
    for values in itertools.product(*grids):
        point = dict(cfg.model_params)
        point.update({name: repr(v) for name, v in zip(names, values)})
        point_cfg = replace(cfg, model_params=point, sweep={})
        model = build_model(point_cfg)
        grid = TimeGrid.uniform(cfg.tau_start, cfg.tau_end, cfg.samples)
        frame = build_frame(model, grid)
        report = condition_report(
            frame, cfg.level, delta_threshold=cfg.delta,
            traditional_threshold=cfg.traditional_threshold, pairing=cfg.pairing,
        )
        psi0 = frame.vectors[0, :, cfg.level].copy()
        result = evolve_schrodinger(model, psi0, grid, tol=cfg.tol)
        fid = metrics.fidelity(result, adiabatic_trajectory(frame, cfg.level))
        rows.append(
            list(values)
            + [
                report.max_traditional,
                1.0 if report.traditional_pass else 0.0,
                report.max_new,
                1.0 if report.new_pass else 0.0,
                float(np.min(fid.values)),
            ]
        )
    table = np.array(rows, dtype=float)
    header = names + [
        "traditional_ratio", "traditional_pass", "new_ratio", "new_pass", "min_fidelity",
    ]
    reporting.write_csv(f"{out}/summary.csv", header, [table[:, i] for i in range(table.shape[1])])
    print(f"sweep: wrote {out}/summary.csv ({len(rows)} points)")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgplab",
        description="Adiabatic-condition laboratory: simulate, diagnose, sweep.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "conditions", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario config path")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--grid", type=int, default=None, help="grid sample override")
        p.add_argument("--tol", type=float, default=None, help="integrator tolerance override")
        p.add_argument("--delta", type=float, default=None, help="criterion delta override")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized drivers")
    fig = sub.add_parser("figure1")
    fig.add_argument("--out", default="out", help="output directory")
    fig.add_argument("--grid", type=int, default=4096)
    fig.add_argument("--tol", type=float, default=1e-6)
    fig.add_argument("--seed", type=int, default=0)
    return parser


def _apply_overrides(cfg: ScenarioConfig, args: argparse.Namespace) -> ScenarioConfig:
    if args.out is not None:
        cfg.out_dir = args.out
    if args.grid is not None:
        cfg.samples = args.grid
    if args.tol is not None:
        cfg.tol = args.tol
    if args.delta is not None:
        cfg.delta = args.delta
    _validate(cfg)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.command == "figure1":
            return cmd_figure1(args.out, samples=args.grid, tol=args.tol)
        cfg = _apply_overrides(parse_config(args.config), args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "conditions":
            return cmd_conditions(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
