"""Command-line front end: config parsing, simulation runs, convergence tables.

Config files are plain ``key = value`` lines with ``#`` comments.  Unknown
keys are errors so typos cannot silently fall back to defaults.  All outputs
use 17-significant-digit floats, making reruns byte-identical on a platform.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mms import run_convergence
from .simulate import constant_ic, ellipse_ic, run_simulation
from .stepper import Model, ModelParams, StepFailure
from .grid import make_grid
from .timemesh import build_mesh

__all__ = ["RunConfig", "ConfigError", "parse_config", "cmd_simulate", "cmd_convergence", "main"]

# reference-table defaults for the convergence study
_DEFAULT_ALPHAS = [0.3, 0.6, 0.9, 1.0]
_DEFAULT_GAMMAS = [8.0, 3.0, 1.5, 1.0]
_DEFAULT_NS = [8, 16, 32, 64]


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: Model
    alpha: float = 0.7
    N: int = 500
    gamma: float = 1.0
    T: float = 10.0
    nx: int = 64
    ny: int = 64
    S: float = 2.0
    eps: float = 0.2
    mobility: float = 0.1
    initial_condition: str = "ellipse"
    tol: float = 1e-10
    maxit: int = 500
    output_dir: str = "out"
    snapshot_stride: int = 0
    binary_snapshots: bool = False
    source_mode: str = "discrete"   # convergence-study forcing convention
    # convergence-study lists (parallel: gammas[i] pairs with alphas[i])
    alphas: list = field(default_factory=lambda: list(_DEFAULT_ALPHAS))
    gammas: list = field(default_factory=lambda: list(_DEFAULT_GAMMAS))
    Ns: list = field(default_factory=lambda: list(_DEFAULT_NS))


_SCALARS = {
    "model": str,
    "alpha": float,
    "N": int,
    "gamma": float,
    "T": float,
    "nx": int,
    "ny": int,
    "S": float,
    "eps": float,
    "mobility": float,
    "initial_condition": str,
    "tol": float,
    "maxit": int,
    "output_dir": str,
    "snapshot_stride": int,
    "binary_snapshots": bool,
    "source_mode": str,
}
_LISTS = {"alphas": float, "gammas": float, "Ns": int}


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {raw!r}")


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, rhs = (part.strip() for part in line.partition("="))
        if key in _SCALARS:
            conv = _SCALARS[key]
            try:
                values[key] = _parse_bool(rhs) if conv is bool else conv(rhs)
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
        elif key in _LISTS:
            conv = _LISTS[key]
            try:
                values[key] = [conv(item.strip()) for item in rhs.split(",") if item.strip()]
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: bad list for {key}: {exc}") from exc
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    if "model" not in values:
        raise ConfigError("missing required key 'model'")
    try:
        values["model"] = Model(values["model"])
    except ValueError:
        raise ConfigError(f"model must be 'ac' or 'ch', got {values['model']!r}") from None
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if not 0 < cfg.alpha <= 1:
        raise ConfigError(f"alpha must be in (0, 1], got {cfg.alpha}")
    if cfg.N < 1:
        raise ConfigError(f"N must be >= 1, got {cfg.N}")
    if cfg.gamma < 1:
        raise ConfigError(f"gamma must be >= 1, got {cfg.gamma}")
    if cfg.T <= 0:
        raise ConfigError(f"T must be positive, got {cfg.T}")
    if cfg.nx < 4 or cfg.ny < 4 or cfg.nx % 2 or cfg.ny % 2:
        raise ConfigError(f"grid sizes must be even and >= 4, got {cfg.nx}x{cfg.ny}")
    if cfg.S < 0 or cfg.eps <= 0 or cfg.mobility <= 0:
        raise ConfigError("S must be >= 0 and eps, mobility positive")
    if not 0 < cfg.tol < 1:
        raise ConfigError(f"tol must be in (0, 1), got {cfg.tol}")
    if cfg.maxit < 1:
        raise ConfigError(f"maxit must be >= 1, got {cfg.maxit}")
    if cfg.snapshot_stride < 0:
        raise ConfigError(f"snapshot_stride must be >= 0, got {cfg.snapshot_stride}")
    if cfg.source_mode not in ("discrete", "analytic"):
        raise ConfigError(f"source_mode must be 'discrete' or 'analytic', got {cfg.source_mode!r}")
    ic = cfg.initial_condition
    if ic != "ellipse" and not ic.startswith("constant:"):
        raise ConfigError(f"unknown initial_condition {ic!r}")
    if ic.startswith("constant:"):
        try:
            float(ic.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad constant initial_condition {ic!r}") from None
    if not (len(cfg.alphas) == len(cfg.gammas) > 0):
        raise ConfigError("alphas and gammas must be equal-length non-empty lists")
    for a in cfg.alphas:
        if not 0 < a <= 1:
            raise ConfigError(f"alphas entries must be in (0, 1], got {a}")
    for gm in cfg.gammas:
        if gm < 1:
            raise ConfigError(f"gammas entries must be >= 1, got {gm}")
    for n in cfg.Ns:
        if n < 1:
            raise ConfigError(f"Ns entries must be >= 1, got {n}")


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _write_field_csv(path: Path, phi: np.ndarray) -> None:
    with open(path, "w") as fh:
        for row in phi:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_field_raw(path: Path, phi: np.ndarray) -> None:
    header = f"FPH1 {phi.shape[0]} {phi.shape[1]}".ljust(15) + "\n"
    if len(header) != 16:
        raise ValueError("grid dimensions too large for the 16-byte raw header")
    with open(path, "wb") as fh:
        fh.write(header.encode())
        phi.astype("<f8").tofile(fh)


def _initial_field(cfg: RunConfig, grid):
    if cfg.initial_condition == "ellipse":
        return ellipse_ic(grid, cfg.eps)
    return constant_ic(grid, float(cfg.initial_condition.split(":", 1)[1]))


def cmd_simulate(cfg: RunConfig) -> int:
    grid = make_grid(cfg.nx, cfg.ny, np.pi, np.pi)
    mesh = build_mesh(cfg.T, cfg.N, cfg.gamma)
    params = ModelParams(
        model=cfg.model, alpha=cfg.alpha, eps=cfg.eps, mobility=cfg.mobility, S=cfg.S
    )
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    phi0 = _initial_field(cfg, grid)
    if cfg.snapshot_stride:
        _snapshot(outdir, 0, phi0, cfg.binary_snapshots)

    def on_record(state, _rec):
        if cfg.snapshot_stride and state.step % cfg.snapshot_stride == 0:
            _snapshot(outdir, state.step, state.phi, cfg.binary_snapshots)

    try:
        _state, records = run_simulation(
            grid, mesh, params, phi0,
            tol=cfg.tol, maxit=cfg.maxit, on_record=on_record,
        )
    except StepFailure as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 1
    with open(outdir / "energy.csv", "w") as fh:
        fh.write("t,E,E_mod,mass,r_drift,identity_residual,iters\n")
        for r in records:
            fh.write(
                ",".join(
                    [
                        _fmt(r.t), _fmt(r.E), _fmt(r.E_mod), _fmt(r.mass),
                        _fmt(r.r_drift), _fmt(r.identity_residual),
                        str(r.solver_iterations),
                    ]
                )
                + "\n"
            )
    return 0


def _snapshot(outdir: Path, step: int, phi: np.ndarray, binary: bool) -> None:
    _write_field_csv(outdir / f"phi_{step}.csv", phi)
    if binary:
        _write_field_raw(outdir / f"phi_{step}.bin", phi)


def cmd_convergence(cfg: RunConfig) -> int:
    gamma_of_alpha = dict(zip(cfg.alphas, cfg.gammas))
    table = run_convergence(
        cfg.model, cfg.alphas, cfg.Ns, gamma_of_alpha,
        nx=cfg.nx, ny=cfg.ny, S=cfg.S, eps=cfg.eps,
        mobility=cfg.mobility, tol=cfg.tol, maxit=cfg.maxit,
        source_mode=cfg.source_mode,
    )
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / f"table_{cfg.model.value}.csv").write_text(table.to_csv())
    print(table.to_text(), end="")
    for (alpha, N), msg in sorted(table.failures.items()):
        print(f"case alpha={alpha} N={N} failed: {msg}", file=sys.stderr)
    return 1 if table.failures else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracphase",
        description="Time-fractional phase-field solver (relaxation scheme).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_sim = sub.add_parser("simulate", help="run one simulation")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--model", choices=["ac", "ch"])
    p_sim.add_argument("--alpha", type=float)
    p_sim.add_argument("--N", type=int)
    p_sim.add_argument("--gamma", type=float)
    p_sim.add_argument("--out")
    p_conv = sub.add_parser("convergence", help="run the temporal convergence study")
    p_conv.add_argument("--config", required=True)
    p_conv.add_argument("--out")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(Path(args.config).read_text())
        if args.command == "simulate":
            if args.model is not None:
                cfg.model = Model(args.model)
            if args.alpha is not None:
                cfg.alpha = args.alpha
            if args.N is not None:
                cfg.N = args.N
            if args.gamma is not None:
                cfg.gamma = args.gamma
        if args.out is not None:
            cfg.output_dir = args.out
        _validate(cfg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.command == "simulate":
        return cmd_simulate(cfg)
    return cmd_convergence(cfg)


if __name__ == "__main__":
    sys.exit(main())
