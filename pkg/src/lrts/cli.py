"""Batch command line interface.

Subcommands: ``manifold``, ``price``, ``simulate``, ``verify``, ``fit``.
All behaviour is a pure function of the JSON config file and the
command-line overrides. Exit codes: 0 success, 1 usage or schema error,
2 domain or invariant violation, 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from .curvespace import WeightSpec, curve_from_json, format_float
from .errors import DomainError, LrtsError, QuadratureError, SchemaError
from .hjm import DiffusionSpec, diffusion_from_json
from .manifold import (LinearRationalManifold, manifold_from_json,
                       matrix_short_rate)
from .quadrature import composite_gauss_legendre
from .simulation import (SimulationConfig, simulate,
                         simulation_config_from_json, write_paths_csv)
from .transform import bond_price
from . import verify as verify_mod

log = logging.getLogger("lrts")

_KNOWN_CHECKS = ("domain_membership", "tangential_columns", "drift_tangency",
                 "martingale", "power_independence", "segment_degeneracy")


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SchemaError(message)


def _setup_logging() -> None:
    level_name = os.environ.get("LRTS_LOG", "error").lower()
    level = {"error": logging.ERROR, "info": logging.INFO,
             "debug": logging.DEBUG}.get(level_name, logging.ERROR)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)


def _load_config(path: str) -> dict:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except FileNotFoundError as exc:
        raise SchemaError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("config root must be a JSON object")
    return data


def _require_section(config: dict, name: str) -> dict:
    section = config.get(name)
    if not isinstance(section, dict):
        raise SchemaError(f"config needs a {name!r} object section")
    return section


def _build_manifold(config: dict) -> LinearRationalManifold:
    return manifold_from_json(_require_section(config, "manifold"))


def _build_diffusion(config: dict, m: LinearRationalManifold) -> DiffusionSpec:
    return diffusion_from_json(_require_section(config, "diffusion"), m)


def _build_weight(config: dict) -> WeightSpec:
    section = config.get("weight", {"alpha": 0.5})
    try:
        return WeightSpec(alpha=float(section["alpha"]),
                          tail_tolerance=float(section.get("tail_tolerance", 1e-14)),
                          x_cap=float(section.get("x_cap", 200.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad weight section: {exc}") from exc


def _build_simulation(config: dict, args, m, spec) -> SimulationConfig:
    section = dict(_require_section(config, "simulation"))
    if getattr(args, "seed", None) is not None:
        section["seed"] = args.seed
    if getattr(args, "paths", None) is not None:
        section["n_paths"] = args.paths
    if getattr(args, "steps", None) is not None:
        section["n_steps"] = args.steps
    return simulation_config_from_json(section, m, spec)


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2, sort_keys=False)
        handle.write("\n")


def _parse_floats(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise SchemaError(f"bad numeric list {text!r}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_manifold(args) -> int:
    config = _load_config(args.config)
    out_path = args.out or "manifold_report.json"
    try:
        m = _build_manifold(config)
    except LrtsError as exc:
        if isinstance(exc, SchemaError):
            raise
        _write_json(out_path, {"ok": False, "error": str(exc)})
        log.error("manifold construction failed: %s", exc)
        print(f"manifold: invariant violation: {exc}", file=sys.stderr)
        return 2
    nodes, w = composite_gauss_legendre(0.0, m.x_max, 256)
    basis = np.column_stack([np.asarray(uj.value(nodes), dtype=float)
                             for uj in m.u])
    gram = basis.T @ (w[:, None] * basis)
    evals = np.linalg.eigvalsh(gram)
    payload = {
        "ok": True,
        "dimension": m.dimension,
        "normalized": m.normalized,
        "matrix_form": m.matrix is not None,
        "x_max": m.x_max,
        "independence": {"gram_eigenvalues": [float(v) for v in evals],
                         "ratio": float(evals[0] / evals[-1])},
        "positivity": {"verified_on_samples": True, "witness": None},
    }
    _write_json(out_path, payload)
    print(f"manifold: ok (d={m.dimension}, normalized={m.normalized})")
    return 0


def cmd_price(args) -> int:
    config = _load_config(args.config)
    m = _build_manifold(config)
    section = config.get("price", {})
    z = _parse_floats(args.z) if args.z else section.get("z")
    maturities = (_parse_floats(args.maturities) if args.maturities
                  else section.get("maturities"))
    if z is None:
        raise SchemaError("price needs a state: --z or config price.z")
    if not maturities:
        raise SchemaError("price needs a nonempty maturity list")
    z = np.asarray(z, dtype=float)
    f = m.chart(z)
    h = m.chart_h(z)
    out_path = args.out or "prices.csv"
    lines = ["maturity,price,forward_rate,discount_h"]
    for x in maturities:
        if x < 0:
            raise DomainError("maturities must be >= 0")
        hx = float(h.value(x))
        lines.append(",".join((format_float(x), format_float(1.0 - hx),
                               format_float(float(f.value(x))),
                               format_float(hx))))
    with open(out_path, "w", newline="") as handle:
        handle.write("\n".join(lines) + "\n")
    print(f"price: wrote {len(maturities)} maturities to {out_path}")
    return 0


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    m = _build_manifold(config)
    spec = _build_diffusion(config, m)
    cfg = _build_simulation(config, args, m, spec)
    paths = simulate(cfg, n_threads=args.threads)
    output = config.get("output", {})
    paths_file = args.out or output.get("paths", "paths.csv")
    summary_file = output.get("summary", "summary.json")
    write_paths_csv(paths, paths_file)

    r_end = paths.short_rates[:, -1]
    summary = {
        "n_paths": cfg.n_paths,
        "n_steps": cfg.n_steps,
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "exited_paths": int(paths.exited.sum()),
        "short_rate": {"mean": float(r_end.mean()),
                       "stddev": float(r_end.std(ddof=1)) if cfg.n_paths > 1 else 0.0},
        "deflator": {"mean": float(paths.deflators[:, -1].mean())},
        "deflated_bonds": {},
    }
    for maturity, grid in paths.bond_prices.items():
        if maturity < cfg.horizon:
            continue
        sample = paths.deflators[:, -1] * grid[:, -1]
        ref = float(grid[0, 0]) if not math.isnan(grid[0, 0]) else None
        entry = {"mean": float(sample.mean()),
                 "stddev": float(sample.std(ddof=1)) if cfg.n_paths > 1 else 0.0,
                 "reference_p0": ref}
        summary["deflated_bonds"][format_float(maturity)] = entry
    _write_json(summary_file, summary)
    print(f"simulate: {cfg.n_paths} paths x {cfg.n_steps} steps -> {paths_file}")
    return 0


def _verify_report(config: dict, args) -> verify_mod.VerificationReport:
    section = _require_section(config, "verify")
    checks = section.get("checks", ["domain_membership", "tangential_columns",
                                    "drift_tangency"])
    for name in checks:
        if name not in _KNOWN_CHECKS:
            raise SchemaError(f"unknown check name {name!r}")
    expected = dict(section.get("expect", {}))
    for name in expected:
        if name not in _KNOWN_CHECKS:
            raise SchemaError(f"unknown check name in expect: {name!r}")
    report = verify_mod.VerificationReport([])

    invariance_names = {"domain_membership", "tangential_columns", "drift_tangency"}
    wanted_invariance = [c for c in checks if c in invariance_names]
    m = None
    spec = None
    if wanted_invariance or "martingale" in checks:
        m = _build_manifold(config)
    if wanted_invariance:
        spec = _build_diffusion(config, m)
        z_samples = section.get("z_samples")
        if not z_samples:
            raise SchemaError("verify needs z_samples for the invariance checks")
        weight = _build_weight(config)
        sub = verify_mod.check_invariance_conditions(
            m, spec, [np.asarray(z, dtype=float) for z in z_samples], weight,
            x_max=section.get("x_max"), expected=expected)
        report.checks.extend(c for c in sub.checks if c.name in wanted_invariance)

    if "martingale" in checks:
        spec = spec or _build_diffusion(config, m)
        cfg = _build_simulation(config, args, m, spec)
        mart = section.get("martingale", {})
        maturity = float(mart.get("T", cfg.horizon + 1.0))
        bound = float(mart.get("z_bound", 3.0))
        result = verify_mod.martingale_test(cfg, maturity, n_threads=args.threads)
        report.checks.append(verify_mod.CheckResult(
            name="martingale", anchor="deflated-bond-martingale",
            statistic=abs(result.z_score), threshold=bound,
            passed=abs(result.z_score) <= bound,
            expected=expected.get("martingale", "pass"),
            metadata={"estimate": result.estimate, "std_error": result.std_error,
                      "reference": result.reference, "n_paths": result.n_paths,
                      "maturity": maturity, "seed": cfg.seed}))

    if "power_independence" in checks:
        sub = section.get("power_independence")
        if not sub:
            raise SchemaError("verify.power_independence section is missing")
        curve = curve_from_json(sub["curve"])
        res = verify_mod.power_independence_test(
            curve, int(sub.get("n_powers", 4)), float(sub.get("x_upper", 10.0)))
        expected_rank = int(sub.get("expected_rank", sub.get("n_powers", 4)))
        report.checks.append(verify_mod.CheckResult(
            name="power_independence", anchor="power-span-rank",
            statistic=float(res.rank), threshold=float(expected_rank),
            passed=res.rank == expected_rank,
            expected=expected.get("power_independence", "pass"),
            metadata={"min_eigenvalue": res.min_eigenvalue}))

    if "segment_degeneracy" in checks:
        sub = section.get("segment_degeneracy")
        if not sub:
            raise SchemaError("verify.segment_degeneracy section is missing")
        m = m or _build_manifold(config)
        z = np.asarray(sub["z"], dtype=float)
        h0 = m.chart(z)
        if sub.get("h1") is None:
            h1 = curve_from_json({"type": "exppoly", "terms": []})
        else:
            h1 = curve_from_json(sub["h1"])
        t_grid = [float(t) for t in sub.get("t_grid", (0.0, 0.25, 0.5, 0.75, 1.0))]
        threshold = float(sub.get("threshold", 1e-8))
        worst = verify_mod.segment_degeneracy_test(m, h0, h1, t_grid,
                                                   x_max=section.get("x_max"))
        report.checks.append(verify_mod.CheckResult(
            name="segment_degeneracy", anchor="segment-transport-degeneracy",
            statistic=worst, threshold=threshold, passed=worst <= threshold,
            expected=expected.get("segment_degeneracy", "pass"),
            metadata={"t_grid": t_grid}))

    return report


def cmd_verify(args) -> int:
    config = _load_config(args.config)
    report = _verify_report(config, args)
    out_path = args.out or "report.json"
    _write_json(out_path, report.to_json())
    for check in report.checks:
        print(f"verify: {check.name}: {check.verdict} "
              f"(statistic {check.statistic:.3e}, threshold {check.threshold:.3e})")
    if not report.ok:
        print("verify: verdicts do not match expectations", file=sys.stderr)
        return 3
    return 0


def cmd_fit(args) -> int:
    config = _load_config(args.config)
    m = _build_manifold(config)
    obs_path = args.observations or config.get("fit", {}).get("observations")
    if not obs_path:
        raise SchemaError("fit needs --observations or config fit.observations")
    observations = []
    try:
        with open(obs_path) as handle:
            header = handle.readline().strip().lower().split(",")
            if header[:2] != ["maturity", "price"]:
                raise SchemaError("observations CSV must start with 'maturity,price'")
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                tok = line.split(",")
                observations.append((float(tok[0]), float(tok[1])))
    except FileNotFoundError as exc:
        raise SchemaError(f"observations file not found: {obs_path}") from exc
    except ValueError as exc:
        raise SchemaError(f"bad observations row: {exc}") from exc
    result = m.fit_state(observations)
    payload = {"z": [float(v) for v in result.state],
               "residual": result.residual,
               "in_domain": result.in_domain}
    out_path = args.out or "fit.json"
    _write_json(out_path, payload)
    print(f"fit: z={payload['z']} residual={result.residual:.3e} "
          f"in_domain={result.in_domain}")
    return 0


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lrts", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", help="output path")
        p.add_argument("--seed", type=int, help="override simulation seed")
        p.add_argument("--paths", type=int, help="override path count")
        p.add_argument("--steps", type=int, help="override step count")
        p.add_argument("--threads", type=int, default=1, help="worker threads")

    p = sub.add_parser("manifold", help="build a manifold and report invariants")
    p.add_argument("action", nargs="?", choices=("build",), help=argparse.SUPPRESS)
    p.add_argument("--report", dest="out_alias", help=argparse.SUPPRESS)
    common(p)
    p.set_defaults(func=cmd_manifold)

    p = sub.add_parser("price", help="bond prices and forward rates at a state")
    p.add_argument("--z", help="comma-separated state coordinates")
    p.add_argument("--maturities", help="comma-separated maturities")
    common(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("simulate", help="simulate factor paths")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run consistency checks")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fit", help="fit a state to observed bond prices")
    p.add_argument("--observations", help="CSV with maturity,price rows")
    common(p)
    p.set_defaults(func=cmd_fit)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "out_alias", None) and not args.out:
            args.out = args.out_alias
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except QuadratureError as exc:
        print(f"numeric error: {exc} (estimate {exc.estimate})", file=sys.stderr)
        return 2
    except LrtsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
