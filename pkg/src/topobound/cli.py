"""Command line entry point: one experiment per invocation, driven by a TOML file.

Exit status: 0 when every verdict holds, 2 when any bound is violated,
1 for configuration and other operational errors (including unresolved
topology).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Optional

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from . import geometry
from .approx import approx_pipeline, fit_polynomial
from .bounds import Verdict, reports_to_csv
from .condition import kappa
from .errors import ConfigError, TopoboundError, UnresolvedTopology
from .experiments import (MORSE_FIELDS, cell_campaign, default_workers, morse_campaign,
                          mv_campaign, rows_to_csv, sharpness_family, sharpness_run,
                          variety_sweep)
from .homology import grid_values, mask_to_text, sublevel_mask, zero_set_betti
from .morse import critical_count
from .poly import Polynomial
from .semialg import SignSystem, cell_bound
from .smoothmap import BuiltinMap, MapSpec, PolynomialMap

log = logging.getLogger("topobound")

COMMANDS = ("condition", "betti", "verify-bound", "semialg", "approx", "morse", "sharpness", "mv-check")

# allowed keys per table; None means free-form (validated by the consumer)
SCHEMA: dict[str, Any] = {
    "seed": None, "resolution": None, "workers": None,
    "manifold": {"name": None, "params": None, "polys": None, "box": None, "m": None, "tol": None},
    "map": {"kind": None, "k": None, "terms": None, "name": None, "params": None, "n": None},
    "family": None,
    "condition": {},
    "betti": {"max_resolution": None, "delta_hat": None},
    "verify": {"kind": None, "n_maps": None, "max_degree": None},
    "semialg": {"dnf": None, "delta": None, "delta_hat": None, "max_resolution": None,
                "campaign": None, "n_systems": None, "max_s": None},
    "approx": {"degree": None, "max_degree": None},
    "morse": {"objective": None, "n_objectives": None, "check": None},
    "sharpness": {"n_max": None, "cap": None},
    "mv": {"n_families": None, "max_sets": None, "grid": None},
}

MAP_KINDS = ("poly", "builtin", "bump_rep")
MANIFOLDS = ("circle", "torus_flat", "box", "implicit", "implicit_circle", "implicit_sphere",
             "torus_quartic")


@dataclass
class ExperimentConfig:
    command: str
    raw: dict
    seed: int = 0
    resolution: Optional[int] = None
    workers: int = 1
    out: str = "."
    manifold: Optional[geometry.ManifoldModel] = None
    section: dict = field(default_factory=dict)


# ---------------------------------------------------------------- parsing

def _check_keys(d: dict, schema: dict, where: str):
    for k, v in d.items():
        if k not in schema:
            raise ConfigError(f"{where}{k}: unknown key")
        sub = schema[k]
        if isinstance(sub, dict):
            if not isinstance(v, dict):
                raise ConfigError(f"{where}{k}: expected a table")
            _check_keys(v, sub, f"{where}{k}.")
        elif k == "family":
            if not isinstance(v, list) or not all(isinstance(t, dict) for t in v):
                raise ConfigError(f"{where}family: expected an array of tables")
            for i, t in enumerate(v):
                _check_keys(t, SCHEMA["map"], f"{where}family[{i}].")


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    _check_keys(raw, SCHEMA, "")
    return raw


def _poly_from_terms(nvars: int, terms, where: str) -> Polynomial:
    """terms: [[exponents], coefficient] pairs."""
    try:
        items = [(tuple(int(e) for e in ex), float(c)) for ex, c in terms]
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: terms must be [[exponents], coefficient] pairs") from None
    for ex, _ in items:
        if len(ex) != nvars:
            raise ConfigError(f"{where}: exponent {list(ex)} needs {nvars} entries")
    return Polynomial.from_list(nvars, items)


def parse_manifold(spec: Optional[dict]) -> geometry.ManifoldModel:
    if not spec:
        raise ConfigError("manifold: missing table")
    name = spec.get("name")
    if name not in MANIFOLDS:
        raise ConfigError(f"manifold.name: expected one of {list(MANIFOLDS)}, got {name!r}")
    params = dict(spec.get("params", {}))
    try:
        if name == "implicit":
            if "polys" not in spec or "box" not in spec:
                raise ConfigError("manifold: implicit needs polys and box")
            box = spec["box"]
            n = len(box)
            polys = [_poly_from_terms(n, p, f"manifold.polys[{i}]") for i, p in enumerate(spec["polys"])]
            return geometry.implicit(polys, box, m=spec.get("m"), tol=float(spec.get("tol", 1e-9)))
        if name == "box":
            return geometry.box(spec.get("box") or params.get("bounds"))
        return getattr(geometry, name)(**params)
    except TypeError as e:
        raise ConfigError(f"manifold.params: {e}") from None
    except ValueError as e:
        raise ConfigError(f"manifold: {e}") from None


def parse_map(spec: Optional[dict], M: geometry.ManifoldModel, where: str = "map") -> MapSpec:
    if not spec:
        raise ConfigError(f"{where}: missing table")
    kind = spec.get("kind")
    if kind not in MAP_KINDS:
        raise ConfigError(f"{where}.kind: expected one of {list(MAP_KINDS)}, got {kind!r}")
    if kind == "poly":
        k = int(spec.get("k", 1))
        comps = [dict() for _ in range(k)]
        for t in spec.get("terms", []):
            try:
                comp, ex, c = t
            except (TypeError, ValueError):
                raise ConfigError(f"{where}.terms: entries are [component, [exponents], coefficient]") from None
            if not 0 <= int(comp) < k:
                raise ConfigError(f"{where}.terms: component {comp} out of range")
            if len(ex) != M.n:
                raise ConfigError(f"{where}.terms: exponent {ex} needs {M.n} entries")
            key = tuple(int(e) for e in ex)
            comps[int(comp)][key] = comps[int(comp)].get(key, 0.0) + float(c)
        return PolynomialMap([Polynomial(M.n, c) for c in comps])
    if kind == "builtin":
        try:
            return BuiltinMap(str(spec.get("name")), spec.get("params", {}))
        except ValueError as e:
            raise ConfigError(f"{where}.name: {e}") from None
    if "n" not in spec:
        raise ConfigError(f"{where}: bump_rep needs n")
    return sharpness_family(M, int(spec["n"]))


def parse_family(specs, M) -> list[MapSpec]:
    if not specs:
        raise ConfigError("family: need a non-empty array of map tables")
    return [parse_map(s, M, f"family[{i}]") for i, s in enumerate(specs)]


# ---------------------------------------------------------------- outputs

def _write(cfg: ExperimentConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    log.info("wrote %s", path)
    return path


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def exit_code(verdicts) -> int:
    verdicts = list(verdicts)
    if any(v == Verdict.VIOLATED for v in verdicts):
        return 2
    if any(v != Verdict.HOLDS for v in verdicts):
        return 1
    return 0


# ---------------------------------------------------------------- commands

def _res(cfg, default):
    return int(cfg.resolution or default)


def cmd_condition(cfg):
    f = parse_map(cfg.raw.get("map"), cfg.manifold)
    rep = kappa(f, cfg.manifold, _res(cfg, 1024))
    _write(cfg, "condition.json", _json(rep.to_json()))
    return 0


def cmd_betti(cfg):
    M = cfg.manifold
    f = parse_map(cfg.raw.get("map"), M)
    N = _res(cfg, 256)
    sec = cfg.section
    dhat = sec.get("delta_hat")
    if dhat is None:
        dhat = kappa(f, M, N).delta
    b = zero_set_betti(f, M, N, float(dhat), max_resolution=sec.get("max_resolution"))
    _write(cfg, "betti.json", _json({"b": list(b), "total": b.total, "resolution": N,
                                     "delta_hat": float(dhat)}))
    if M.m in (1, 2):
        V = grid_values(f, M, N)
        mask = sublevel_mask(np.sqrt(np.sum(V * V, axis=0)), 0.45 * float(dhat), M.periodic)
        _write(cfg, "mask.txt", mask_to_text(mask))
    return 0


def cmd_verify(cfg):
    sec = cfg.section
    kind = sec.get("kind", "sweep")
    M = cfg.manifold
    if kind == "sweep":
        reps = variety_sweep(int(sec.get("n_maps", 100)), cfg.seed, int(sec.get("max_degree", 3)),
                               _res(cfg, 256), M, cfg.workers)
    elif kind == "pipeline":
        f = parse_map(cfg.raw.get("map"), M)
        reps = [approx_pipeline(f, M, _res(cfg, 256))]
    else:
        raise ConfigError(f"verify.kind: expected sweep or pipeline, got {kind!r}")
    _write(cfg, "bounds.csv", reports_to_csv(reps))
    return exit_code(r.verdict for r in reps)


def cmd_semialg(cfg):
    M = cfg.manifold
    sec = cfg.section
    N = _res(cfg, 64)
    if sec.get("campaign"):
        reps = cell_campaign(M, int(sec.get("n_systems", 50)), cfg.seed, int(sec.get("max_s", 3)),
                             resolution=N, workers=cfg.workers)
    else:
        F = parse_family(cfg.raw.get("family"), M)
        dnf = sec.get("dnf")
        if not dnf:
            raise ConfigError("semialg.dnf: missing")
        try:
            S = SignSystem(tuple(F), tuple(tuple(c) for c in dnf), sec.get("delta"))
        except ValueError as e:
            raise ConfigError(f"semialg.dnf: {e}") from None
        _, rep = cell_bound(S, M, N, delta_hat=sec.get("delta_hat"),
                            max_resolution=sec.get("max_resolution"))
        reps = [rep]
    _write(cfg, "semialg.csv", reports_to_csv(reps))
    return exit_code(r.verdict for r in reps)


def cmd_approx(cfg):
    M = cfg.manifold
    f = parse_map(cfg.raw.get("map"), M)
    sec = cfg.section
    if "degree" in sec:
        fit = fit_polynomial(f, M, int(sec["degree"]))
        _write(cfg, "fit.json", _json(fit.to_json()))
        return 0
    rep, fit = approx_pipeline(f, M, _res(cfg, 256), max_degree=int(sec.get("max_degree", 64)),
                               return_fit=True)
    if fit is not None:
        _write(cfg, "fit.json", _json(fit.to_json()))
    _write(cfg, "bounds.csv", reports_to_csv([rep]))
    return exit_code([rep.verdict])


def cmd_morse(cfg):
    M = cfg.manifold
    if M.is_chart:
        raise ConfigError("morse: needs an implicit manifold")
    sec = cfg.section
    N = _res(cfg, 64)
    if "objective" in sec:
        r = _poly_from_terms(M.n, sec["objective"], "morse.objective")
        res = critical_count(M.polys, r, M, N, check=bool(sec.get("check", True)))
        pts = ";".join(" ".join(repr(float(v)) for v in p) for p in res.points)
        text = rows_to_csv([{"count": res.count, "bound": res.bound, "points": pts}],
                           ("count", "bound", "points"))
        _write(cfg, "morse.csv", text)
        return 0 if res.count <= res.bound else 2
    recs = morse_campaign(int(sec.get("n_objectives", 50)), cfg.seed, (M,), N, cfg.workers)
    _write(cfg, "morse.csv", rows_to_csv([r.row() for r in recs], MORSE_FIELDS))
    return 0 if all(r.holds for r in recs) else 2


def cmd_sharpness(cfg):
    sec = cfg.section
    run = sharpness_run(cfg.manifold, int(sec.get("n_max", 4)), _res(cfg, 128), sec.get("cap"),
                        cfg.workers)
    _write(cfg, "sharpness.csv", run.to_csv())
    _write(cfg, "sharpness.json", _json({"m": run.m, "packing_constant": run.packing_constant,
                                         "base_betti": run.base_betti,
                                         "truncated_at": run.truncated_at, "verdict": run.verdict}))
    if run.truncated_at is not None:
        return 1
    return 0 if run.holds else 2


def cmd_mv(cfg):
    sec = cfg.section
    g = int(sec.get("grid", 32))
    reps = mv_campaign(int(sec.get("n_families", 200)), cfg.seed, (g, g),
                       int(sec.get("max_sets", 4)), cfg.workers)
    _write(cfg, "mv.csv", reports_to_csv(reps))
    return exit_code(r.verdict for r in reps)


HANDLERS = {
    "condition": (cmd_condition, "condition", True),
    "betti": (cmd_betti, "betti", True),
    "verify-bound": (cmd_verify, "verify", True),
    "semialg": (cmd_semialg, "semialg", True),
    "approx": (cmd_approx, "approx", True),
    "morse": (cmd_morse, "morse", True),
    "sharpness": (cmd_sharpness, "sharpness", True),
    "mv-check": (cmd_mv, "mv", False),
}


def build_config(command: str, raw: dict, args) -> ExperimentConfig:
    _, section, needs_manifold = HANDLERS[command]
    seed = args.seed if args.seed is not None else raw.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigError(f"seed: expected an unsigned 64-bit integer, got {seed!r}")
    res = args.resolution if args.resolution is not None else raw.get("resolution")
    workers = args.workers if args.workers is not None else raw.get("workers", default_workers())
    cfg = ExperimentConfig(command, raw, seed=seed, resolution=res, workers=int(workers),
                           out=args.out, section=dict(raw.get(section, {})))
    if needs_manifold:
        cfg.manifold = parse_manifold(raw.get("manifold"))
    return cfg


def run(command: str, raw: dict, args) -> int:
    cfg = build_config(command, raw, args)
    return HANDLERS[command][0](cfg)


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topobound", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML experiment file")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=None, help="default: available cores")
    common.add_argument("--resolution", type=int, default=None)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for c in COMMANDS:
        sub.add_parser(c, parents=[common])
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        raw = load_config(args.config)
        return run(args.command, raw, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except UnresolvedTopology as e:
        print(f"unresolved: {e}", file=sys.stderr)
        return 1
    except TopoboundError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
