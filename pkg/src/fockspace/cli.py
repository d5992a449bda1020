"""Scenario runner: reproducible experiments over the library modules.

Four subcommands (state, wigner, homodyne, tomography) read a JSON config
validated against the published schema (unknown keys rejected); any flag
overrides the corresponding config key, and a single --seed governs all
randomness.  Outputs are plot-ready CSV/JSON files, each carrying the
sha256 digest of the resolved configuration; identical (config, seed)
produce byte-identical files.

Exit codes: 0 ok, 2 config error, 3 numeric/cutoff error, 4 data-contract
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from importlib.resources import files as resource_files

import jsonschema
import numpy as np

from . import hilbert, homodyne, phase_space, photon_stats, tomography
from .errors import (ConfigError, DataContractError, FockspaceError,
                     UndefinedStatisticError)

DEFAULTS = {
    "eta": 1.0,
    "samples": 10000,
    "seed": 0,
    "bins": 50,
    "output_dir": ".",
    "grid": {"half_width": 5.0, "points": 128, "ordering": 0.0},
    "marginal_thetas": [],
    "targets": ["n"],
}


def _schema() -> dict:
    text = resource_files("fockspace").joinpath(
        "scenario_schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message}") from exc


def config_digest(cfg: dict) -> str:
    """sha256 of the resolved config, ignoring where the output lands."""
    scrubbed = {k: v for k, v in cfg.items() if k != "output_dir"}
    canon = json.dumps(scrubbed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def build_state(spec: dict):
    kind = spec["kind"]
    cutoff = spec["cutoff"]
    if kind == "fock":
        return hilbert.make_fock(spec.get("n", 0), cutoff)
    if kind == "coherent":
        alpha = complex(spec.get("alpha_re", 0.0), spec.get("alpha_im", 0.0))
        return hilbert.make_coherent(alpha, cutoff)
    if kind == "thermal":
        return hilbert.make_thermal(spec.get("mean_photons", 0.0), cutoff)
    xi = spec.get("r", 0.0) * np.exp(1j * spec.get("psi", 0.0))
    if kind == "squeezed":
        return hilbert.make_squeezed_vacuum(xi, cutoff)
    if kind == "twin_beam":
        return hilbert.make_twin_beam(xi, cutoff)
    raise ConfigError(f"unknown state kind {kind!r}")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, sort_keys=True, indent=2))
        fh.write("\n")


def _float_or_none(fn):
    try:
        return float(fn())
    except UndefinedStatisticError:
        return None


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

def cmd_state(cfg: dict, out: Path) -> None:
    digest = config_digest(cfg)
    state = build_state(cfg["state"])
    hilbert.save_state(state, out / "state.json")

    single = hilbert.partial_trace(state, "a") if hilbert.is_two_mode(state) else state
    dist = photon_stats.photon_distribution(single)
    photon_stats.save_distribution_csv(dist, out / "photon_distribution.csv")

    ops = hilbert.ladder_matrices(single.dim)
    mean_n = hilbert.expectation(single, ops.number)
    summary = {
        "config_digest": digest,
        "state_digest": hilbert.state_digest(state),
        "mean_n": mean_n,
        "var_n": hilbert.variance(single, ops.number),
        "fano": _float_or_none(lambda: photon_stats.fano(dist)),
        "mandel_q": _float_or_none(lambda: photon_stats.mandel_q(dist)),
        "g2_zero": _float_or_none(lambda: photon_stats.g2_zero(dist)),
        "purity": hilbert.purity(state),
        "entropy": hilbert.von_neumann_entropy(
            state if not hilbert.is_ket(state) else state.density_matrix()),
        "tail_deficit": state.tail_deficit,
    }
    if hilbert.is_two_mode(state):
        summary["total_mean_n"] = 2.0 * mean_n
        summary["excess_entropy"] = hilbert.excess_entropy(state)
    eta = cfg.get("eta", 1.0)
    if eta < 1.0:
        detected = photon_stats.bernoulli_loss(dist, eta)
        photon_stats.save_distribution_csv(detected,
                                           out / "detected_distribution.csv")
        summary["eta"] = eta
        summary["detected_mean"] = detected.moment(1)
    _write_json(out / "summary.json", summary)


def cmd_wigner(cfg: dict, out: Path) -> None:
    digest = config_digest(cfg)
    state = build_state(cfg["state"])
    gspec = {**DEFAULTS["grid"], **cfg.get("grid", {})}
    grid = phase_space.PhaseGrid(gspec["half_width"], gspec["points"])
    qpg = phase_space.quasi_prob_fft(state, grid, gspec["ordering"])
    sdig = hilbert.state_digest(state)
    phase_space.save_quasi_prob(
        qpg, out / "wigner.csv", out / "wigner.json", sdig,
        extra_meta={"config_digest": digest,
                    "min_value": float(qpg.values.min()),
                    "max_value": float(qpg.values.max()),
                    "riemann_mass": qpg.riemann_mass()})
    for i, theta in enumerate(cfg.get("marginal_thetas", [])):
        marg = phase_space.marginal(qpg, theta)
        path = out / f"marginal_{i}.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            header = {"config_digest": digest, "theta": theta}
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            fh.write("x,density\n")
            for x, dens in zip(marg.xs, marg.density):
                fh.write(f"{float(x)!r},{float(dens)!r}\n")


def cmd_homodyne(cfg: dict, out: Path) -> None:
    digest = config_digest(cfg)
    state = build_state(cfg["state"])
    ds = homodyne.sample_homodyne(state, cfg.get("samples", DEFAULTS["samples"]),
                                  eta=cfg.get("eta", 1.0),
                                  seed=cfg.get("seed", 0))
    ds = homodyne.HomodyneDataset(ds.thetas, ds.xs, ds.eta, ds.seed,
                                  ds.state_digest, ds.rng_id,
                                  {"config_digest": digest})
    homodyne.save_dataset(ds, out / "dataset.csv")
    # keep >= ~10 records per bin so the per-bin variances are meaningful
    bins = max(2, min(cfg.get("bins", DEFAULTS["bins"]), ds.m // 10))
    summary = homodyne.phase_trace_summary(ds, bins)
    _write_json(out / "trace_summary.json", {
        "config_digest": digest,
        "bins": int(summary.centers.size),
        "centers": [float(v) for v in summary.centers],
        "means": [float(v) for v in summary.means],
        "variances": [float(v) for v in summary.variances],
        "counts": [int(v) for v in summary.counts],
        "max_squeezing_db": summary.max_squeezing_db,
    })


def cmd_tomography(cfg: dict, out: Path) -> None:
    digest = config_digest(cfg)
    if "dataset" not in cfg:
        raise ConfigError("tomography needs a dataset file")
    ds = homodyne.load_dataset(cfg["dataset"])
    if "eta" in cfg and cfg["eta"] != ds.eta:
        raise DataContractError(
            f"configured eta {cfg['eta']} contradicts the dataset header "
            f"eta {ds.eta}")
    estimates = []
    scans = []
    for text in cfg.get("targets", DEFAULTS["targets"]):
        target = tomography.parse_target(text)
        kernel = tomography.EstimatorKernel(target, ds.eta)
        est = tomography.estimate(ds, kernel)
        estimates.append({
            "target": text,
            "value_re": est.value.real,
            "value_im": est.value.imag,
            "std_error": est.std_error,
            "M": est.m,
            "eta": ds.eta,
        })
        if cfg.get("checkpoints"):
            for m_i, e_i in tomography.convergence_scan(ds, kernel,
                                                        cfg["checkpoints"]):
                scans.append((text, m_i, e_i))
    _write_json(out / "estimates.json",
                {"config_digest": digest, "estimates": estimates})
    if scans:
        with open(out / "convergence.csv", "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("# " + json.dumps({"config_digest": digest}) + "\n")
            fh.write("target,M,value_re,value_im,std_error\n")
            for text, m_i, e_i in scans:
                fh.write(f"{text},{m_i},{e_i.value.real!r},"
                         f"{e_i.value.imag!r},{e_i.std_error!r}\n")


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

_STATE_FLAGS = ["kind", "cutoff", "n", "alpha_re", "alpha_im",
                "mean_photons", "r", "psi"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fockspace",
        description="Truncated Fock-space quantum optics scenarios.")
    sub = parser.add_subparsers(dest="scenario", required=True)
    specs = {
        "state": "construct a state; write its JSON form, photon "
                 "distribution CSV (plus eta-detected CSV) and summary JSON",
        "wigner": "sample a quasi-probability on a grid; write CSV + JSON "
                  "sidecar and optional quadrature marginals",
        "homodyne": "Monte Carlo homodyne records; write the dataset CSV "
                    "and a per-phase-bin trace summary",
        "tomography": "estimate operator expectations from a dataset file; "
                      "write estimates JSON and optional convergence table",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON scenario configuration")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--seed", type=int)
        p.add_argument("--eta", type=float)
        for flag in _STATE_FLAGS:
            kind = str if flag == "kind" else (int if flag in ("cutoff", "n")
                                               else float)
            p.add_argument(f"--state-{flag.replace('_', '-')}",
                           dest=f"state_{flag}", type=kind)
        if name == "wigner":
            p.add_argument("--grid-half-width", dest="grid_half_width",
                           type=float)
            p.add_argument("--grid-points", dest="grid_points", type=int)
            p.add_argument("--ordering", type=float)
            p.add_argument("--marginal-theta", dest="marginal_thetas",
                           type=float, action="append")
        if name == "homodyne":
            p.add_argument("--samples", type=int)
            p.add_argument("--bins", type=int)
        if name == "tomography":
            p.add_argument("--dataset")
            p.add_argument("--targets",
                           help="comma-separated target specs, e.g. n,a,x:0.5")
            p.add_argument("--checkpoints",
                           help="comma-separated prefix sizes")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config) if args.config else {}
    if cfg.get("scenario", args.scenario) != args.scenario:
        raise ConfigError(
            f"config scenario {cfg['scenario']!r} does not match the "
            f"{args.scenario!r} subcommand")
    cfg["scenario"] = args.scenario
    for key in ("output_dir", "seed", "eta", "samples", "bins", "dataset"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "targets", None):
        cfg["targets"] = [t.strip() for t in args.targets.split(",")]
    if getattr(args, "checkpoints", None):
        try:
            cfg["checkpoints"] = [int(c) for c in args.checkpoints.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad checkpoint list: {exc}") from exc
    if getattr(args, "marginal_thetas", None):
        cfg["marginal_thetas"] = args.marginal_thetas
    grid_over = {k: getattr(args, f"grid_{k}", None)
                 for k in ("half_width", "points")}
    grid_over["ordering"] = getattr(args, "ordering", None)
    grid_over = {k: v for k, v in grid_over.items() if v is not None}
    if grid_over:
        cfg["grid"] = {**cfg.get("grid", {}), **grid_over}
    state_over = {k: getattr(args, f"state_{k}", None) for k in _STATE_FLAGS}
    state_over = {k: v for k, v in state_over.items() if v is not None}
    if state_over:
        cfg["state"] = {**cfg.get("state", {}), **state_over}
    validate_config(cfg)
    if args.scenario in ("state", "wigner", "homodyne") and "state" not in cfg:
        raise ConfigError(f"the {args.scenario} scenario needs a state spec")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    runners = {"state": cmd_state, "wigner": cmd_wigner,
               "homodyne": cmd_homodyne, "tomography": cmd_tomography}
    try:
        cfg = resolve_config(args)
        out = Path(cfg.get("output_dir", DEFAULTS["output_dir"]))
        out.mkdir(parents=True, exist_ok=True)
        runners[args.scenario](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataContractError as exc:
        print(f"data-contract error: {exc}", file=sys.stderr)
        return 4
    except FockspaceError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
