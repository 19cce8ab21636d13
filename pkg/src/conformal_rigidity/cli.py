"""Command-line front end.

    conformal-rigidity COMMAND --config run.json [--out result.json]
                       [--seed N] [--no-timestamp]

Commands: ``invariant``, ``frame``, ``mobius-apply``, ``equivalence``,
``lemma-check``.  Exit status is 0 on success, 2 when a hypothesis of the
rigidity theorem fails (refusal) and 1 on any error.  See ``docs/formats.md``
for the config and result fields.
"""
from __future__ import annotations

import argparse
import datetime
import json
import math
import sys

import numpy as np

from . import __version__
from .bilinear import DET_EPS
from .catalog import CATALOG, catalog_surface, default_space
from .equivalence import (
    FACTOR_TOL,
    CorrespondencePair,
    EquivalenceConfig,
    lemma_residual,
    test_equivalence,
)
from .expr import parse
from .errors import ConfigError, ConformalError, ParseError, Refusal
from .frames import build_frame, connection_at, frame_residuals, structure_residual
from .hypersurface import (
    UMBILIC_TOL,
    Immersion,
    fundamental_forms,
    invariant_I,
    is_umbilical,
    jet_at,
    jets_on_grid,
)
from .mobius import AmbientSpace, compose_steps, orthogonality_residual

COMMANDS = ("invariant", "frame", "mobius-apply", "equivalence", "lemma-check")
EXIT_OK, EXIT_ERROR, EXIT_REFUSAL = 0, 1, 2

DEFAULT_TOLERANCES = {
    "umbilic_tol": UMBILIC_TOL,
    "factor_tol": FACTOR_TOL,
    "det_eps": DET_EPS,
    "fd_step": 1e-4,
}


# -- config ------------------------------------------------------------------

class RunConfig:
    """Validated run configuration built from a JSON document."""

    def __init__(self, raw: dict):
        if not isinstance(raw, dict):
            raise ConfigError("top level must be an object")
        self.raw = raw
        self.space = self._space(raw)
        self.surface = self._surface(raw.get("surface"), "surface")
        self.surface_bar = None
        if "surface_bar" in raw:
            self.surface_bar = self._surface(raw["surface_bar"], "surface_bar")
        self.mobius_steps = self._steps(raw.get("mobius", []), "mobius")
        self.resolution = self._resolution(raw.get("grid", 5))
        tol = dict(DEFAULT_TOLERANCES)
        extra = raw.get("tolerances", {})
        if not isinstance(extra, dict):
            raise ConfigError("must be an object", "tolerances")
        for key, value in extra.items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance (expected one of {sorted(DEFAULT_TOLERANCES)})", f"tolerances.{key}")
            if not isinstance(value, (int, float)) or not value > 0:
                raise ConfigError("must be a positive number", f"tolerances.{key}")
            tol[key] = float(value)
        self.tolerances = tol
        self.directions = raw.get("directions", 3)
        self.reconstruct = bool(raw.get("reconstruct", True))
        self.structure_step = float(raw.get("structure_step", 1e-2))
        self.interior_margin = float(raw.get("interior_margin", 0.1))

    def _space(self, raw) -> AmbientSpace:
        sig = raw.get("signature")
        if sig is None:
            surf = raw.get("surface")
            name = surf.get("catalog") if isinstance(surf, dict) else None
            return default_space(name) if name in CATALOG else AmbientSpace.of(4, 0)
        if not (isinstance(sig, list) and len(sig) == 2 and all(isinstance(v, int) for v in sig)):
            raise ConfigError("must be [p, q] with integer entries", "signature")
        p, q = sig
        if p < 1 or q < 0 or p + q < 3:
            raise ConfigError("needs p >= 1, q >= 0 and p + q >= 3", "signature")
        return AmbientSpace.of(p, q)

    def _surface(self, spec, where) -> Immersion:
        if not isinstance(spec, dict):
            raise ConfigError("surface definition must be an object", where)
        if "catalog" in spec:
            name = spec["catalog"]
            if name not in CATALOG:
                raise ConfigError(f"unknown catalog surface {name!r}; choose from {', '.join(CATALOG)}", f"{where}.catalog")
            try:
                imm = catalog_surface(name, space=self.space)
            except ConformalError as exc:
                raise ConfigError(str(exc), f"{where}.catalog") from None
        elif "components" in spec:
            comps = spec["components"]
            n = self.space.n
            if not isinstance(comps, list) or len(comps) != n:
                raise ConfigError(f"expected a list of {n} expressions", f"{where}.components")
            domain = spec.get("domain")
            if not (isinstance(domain, list) and len(domain) == n - 1
                    and all(isinstance(iv, list) and len(iv) == 2 for iv in domain)):
                raise ConfigError(f"expected {n - 1} intervals [lo, hi]", f"{where}.domain")
            nodes = []
            for k, text in enumerate(comps):
                if not isinstance(text, str):
                    raise ConfigError("expression must be a string", f"{where}.components[{k}]")
                try:
                    nodes.append(parse(text, n - 1))
                except ParseError as exc:
                    raise ConfigError(str(exc), f"{where}.components[{k}]") from None
            try:
                imm = Immersion(self.space, nodes, domain, spec.get("name", "custom"))
            except ConformalError as exc:
                raise ConfigError(str(exc), where) from None
        else:
            raise ConfigError("needs either 'catalog' or 'components'", where)
        steps = self._steps(spec.get("mobius", []), f"{where}.mobius")
        if steps:
            imm = imm.transformed(self._compose(steps, f"{where}.mobius"))
        return imm

    def _steps(self, steps, where):
        if not isinstance(steps, list) or not all(isinstance(s, dict) and "kind" in s for s in steps):
            raise ConfigError("expected a list of {\"kind\": ...} generator objects", where)
        if steps:
            self._compose(steps, where)
        return steps

    def _compose(self, steps, where):
        try:
            return compose_steps(self.space, steps)
        except (ConformalError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc), where) from None

    def _resolution(self, grid):
        d = self.space.n - 1
        if isinstance(grid, int):
            grid = [grid] * d
        if not (isinstance(grid, list) and len(grid) == d and all(isinstance(k, int) for k in grid)):
            raise ConfigError(f"expected an integer or a list of {d} integers", "grid")
        if any(k < 2 for k in grid):
            raise ConfigError("resolution must be at least 2 per axis", "grid")
        return grid

    def mobius(self):
        return compose_steps(self.space, self.mobius_steps)


# -- commands ----------------------------------------------------------------

def _arr(a):
    return np.asarray(a, dtype=float).tolist()


def _error_entry(u, exc):
    entry = {"error": type(exc).__name__, "message": str(exc)}
    for key in ("field", "line"):
        if getattr(exc, key, None) is not None:
            entry[key] = getattr(exc, key)
    if u is not None:
        entry["u"] = _arr(u)
    return entry


def _directions(cfg: RunConfig, rng):
    d = cfg.space.n - 1
    spec = cfg.directions
    if isinstance(spec, int):
        if spec < 1:
            raise ConfigError("must be positive", "directions")
        return rng.normal(size=(spec, d))
    try:
        arr = np.asarray(spec, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("expected a count or a list of vectors", "directions") from None
    if arr.ndim != 2 or arr.shape[1] != d:
        raise ConfigError(f"expected a count or a list of {d}-vectors", "directions")
    return arr


def _grid_data(imm, grid, cfg, errors):
    """Fundamental data per grid point; failures become error entries."""
    out = []
    try:
        jets = jets_on_grid(imm, grid)
    except ConformalError:
        jets = []
        for u in grid:
            try:
                jets.append(jet_at(imm, u))
            except ConformalError as exc:
                errors.append(_error_entry(u, exc))
                jets.append(None)
    for u, jet in zip(grid, jets):
        if jet is None:
            out.append((u, None, None))
            continue
        try:
            out.append((u, jet, fundamental_forms(imm.space, jet, cfg.tolerances["det_eps"])))
        except ConformalError as exc:
            errors.append(_error_entry(u, exc))
            out.append((u, jet, None))
    return out


def cmd_invariant(cfg: RunConfig, rng):
    imm = cfg.surface
    errors, points = [], []
    dirs = _directions(cfg, rng)
    max_apolarity = 0.0
    max_I = 0.0
    umbilic_count = 0
    for u, jet, data in _grid_data(imm, imm.grid(cfg.resolution), cfg, errors):
        if data is None:
            continue
        umb = is_umbilical(data, cfg.tolerances["umbilic_tol"])
        umbilic_count += umb
        apolarity = abs(float(np.sum(data.g_inv * data.h)))
        max_apolarity = max(max_apolarity, apolarity)
        samples = []
        for w in dirs:
            try:
                value = invariant_I(data, w)
            except ConformalError as exc:
                errors.append({**_error_entry(u, exc), "direction": _arr(w)})
                continue
            max_I = max(max_I, abs(value))
            samples.append({"direction": _arr(w), "I": value})
        points.append({
            "u": _arr(u),
            "x": _arr(jet.x),
            "g": _arr(data.g),
            "h": _arr(data.h),
            "lambda": _arr(data.lam),
            "lambda_mean": data.lam_mean,
            "epsilon": data.epsilon,
            "umbilic": umb,
            "apolarity": apolarity,
            "I": samples,
        })
    summary = {
        "points": len(points),
        "umbilic_points": int(umbilic_count),
        "all_umbilic": bool(points) and umbilic_count == len(points),
        "max_apolarity": max_apolarity,
        "max_abs_I": max_I,
    }
    return points, summary, errors, None


def cmd_frame(cfg: RunConfig, rng):
    imm = cfg.surface
    errors, points = [], []
    step = cfg.tolerances["fd_step"] * max(hi - lo for lo, hi in imm.domain)
    s_step = cfg.structure_step
    worst = {"frame": 0.0, "lambda": 0.0, "h": 0.0, "relations": 0.0}
    ratios = []
    for u in imm.interior_grid(cfg.resolution, cfg.interior_margin):
        try:
            jet = jet_at(imm, u)
            data = fundamental_forms(imm.space, jet, cfg.tolerances["det_eps"])
            res1 = frame_residuals(build_frame(imm.space, jet, data, 1), data.g)
            res2 = frame_residuals(build_frame(imm.space, jet, data, 2), data.g)
            c1 = connection_at(imm, u, step, order=1)
            c2 = connection_at(imm, u, step, order=2)
            lam_err = float(np.max(np.abs(c1.second_form() - data.lam)))
            h_err = float(np.max(np.abs(c2.second_form() - data.h)))
            rel = {**c1.relation_residuals()}
            s_full = structure_residual(imm, u, s_step)
            s_half = structure_residual(imm, u, s_step / 2)
        except ConformalError as exc:
            errors.append(_error_entry(u, exc))
            continue
        ratio = s_full / s_half if s_half > 0 else None
        if ratio is not None:
            ratios.append(ratio)
        worst["frame"] = max(worst["frame"], res1.max(), res2.max())
        worst["lambda"] = max(worst["lambda"], lam_err)
        worst["h"] = max(worst["h"], h_err)
        worst["relations"] = max(worst["relations"], max(rel.values()))
        points.append({
            "u": _arr(u),
            "frame_residuals": {"order1": vars(res1), "order2": vars(res2)},
            "connection": rel,
            "lambda_recovery_error": lam_err,
            "h_recovery_error": h_err,
            "structure_residual": s_full,
            "structure_residual_half_step": s_half,
            "structure_ratio": ratio,
        })
    summary = {
        "points": len(points),
        "fd_step": step,
        "structure_step": s_step,
        "max_frame_residual": worst["frame"],
        "max_lambda_recovery_error": worst["lambda"],
        "max_h_recovery_error": worst["h"],
        "max_relation_residual": worst["relations"],
        "structure_ratio_min": min(ratios) if ratios else None,
        "structure_ratio_max": max(ratios) if ratios else None,
    }
    return points, summary, errors, None


def cmd_mobius_apply(cfg: RunConfig, rng):
    imm = cfg.surface
    m = cfg.mobius()
    out = imm.transformed(m)
    errors, points = [], []
    for u in imm.grid(cfg.resolution):
        try:
            points.append({"u": _arr(u), "x": _arr(imm.point(u)), "x_bar": _arr(out.point(u))})
        except ConformalError as exc:
            errors.append(_error_entry(u, exc))
    summary = {
        "matrix": _arr(m.matrix),
        "orthogonality_residual": orthogonality_residual(m),
        "surface": {
            "components": out.expressions(),
            "domain": [list(iv) for iv in out.domain],
            "name": out.name,
        },
    }
    return points, summary, errors, None


def cmd_equivalence(cfg: RunConfig, rng):
    if cfg.surface_bar is None:
        raise ConfigError("equivalence needs a second surface", "surface_bar")
    grid = cfg.surface.grid(cfg.resolution)
    pair = CorrespondencePair(cfg.surface, cfg.surface_bar, grid)
    config = EquivalenceConfig(
        umbilic_tol=cfg.tolerances["umbilic_tol"],
        factor_tol=cfg.tolerances["factor_tol"],
        det_eps=cfg.tolerances["det_eps"],
        reconstruct=cfg.reconstruct,
    )
    verdict = test_equivalence(pair, config)
    if verdict.refused:
        summary = {"equivalent": None, "umbilic_points": verdict.umbilic_points}
        return [], summary, [], verdict.refusal_reason
    points = [{"u": _arr(u), "sigma": float(s)} for u, s in zip(grid, verdict.sigma)]
    summary = {
        "equivalent": verdict.equivalent,
        "max_g_residual": verdict.max_g_residual,
        "max_h_residual": verdict.max_h_residual,
        "sigma_sign_consistent": verdict.sigma_sign_consistent,
        "abs_sigma_min": float(np.min(np.abs(verdict.sigma))),
        "abs_sigma_max": float(np.max(np.abs(verdict.sigma))),
    }
    if verdict.reconstructed is not None:
        summary["reconstructed"] = _arr(verdict.reconstructed.matrix)
        summary["orthogonality_residual"] = orthogonality_residual(verdict.reconstructed)
        summary["map_residual"] = verdict.map_residual
    return points, summary, [], None


def cmd_lemma_check(cfg: RunConfig, rng):
    imm = cfg.surface
    errors, points = [], []
    tol = cfg.tolerances["umbilic_tol"]
    nonumb, umb = [], []
    for u, jet, data in _grid_data(imm, imm.grid(cfg.resolution), cfg, errors):
        if data is None:
            continue
        flag = is_umbilical(data, tol)
        r = lemma_residual(data, tol)
        (umb if flag else nonumb).append(r)
        points.append({"u": _arr(u), "umbilic": flag, "lemma_residual": r})
    summary = {
        "points": len(points),
        "within_hypothesis": imm.space.n >= 4,
        "min_residual_non_umbilic": min(nonumb) if nonumb else None,
        "max_residual_umbilic": max(umb) if umb else None,
    }
    return points, summary, errors, None


HANDLERS = {
    "invariant": cmd_invariant,
    "frame": cmd_frame,
    "mobius-apply": cmd_mobius_apply,
    "equivalence": cmd_equivalence,
    "lemma-check": cmd_lemma_check,
}


def _finite(obj):
    """Replace non-finite floats by None so the record stays valid JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return _finite(obj.item())
    return obj


def run(command: str, raw_config: dict, seed: int = 0, timestamp: bool = False):
    """Execute ``command``; returns ``(record, exit_status)``."""
    record = {"command": command, "tool_version": __version__, "config": raw_config, "seed": seed}
    if timestamp:
        record["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    try:
        if command not in HANDLERS:
            raise ConfigError(f"unknown command (expected one of {', '.join(COMMANDS)})", "command")
        cfg = RunConfig(raw_config)
        points, summary, errors, refusal = HANDLERS[command](cfg, np.random.default_rng(seed))
    except Refusal as exc:
        record.update(status="refused", refusal_reason=str(exc), points=[], summary={}, errors=[])
        return _finite(record), EXIT_REFUSAL
    except ConformalError as exc:
        record.update(status="error", points=[], summary={}, errors=[_error_entry(None, exc)])
        return _finite(record), EXIT_ERROR
    record.update(points=points, summary=summary, errors=errors)
    if refusal is not None:
        record.update(status="refused", refusal_reason=refusal)
        return _finite(record), EXIT_REFUSAL
    record["status"] = "error" if errors else "ok"
    return _finite(record), EXIT_ERROR if errors else EXIT_OK


def dumps(record) -> str:
    return json.dumps(record, indent=2, sort_keys=True, allow_nan=False) + "\n"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="conformal-rigidity", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="result file (default: stdout)")
    parser.add_argument("--seed", type=int, default=0, help="seed for random direction sampling")
    parser.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    args = parser.parse_args(argv)
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        err = ConfigError(exc.msg, line=exc.lineno)
        record = {"command": args.command, "tool_version": __version__, "status": "error",
                  "errors": [_error_entry(None, err)]}
        status = EXIT_ERROR
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_ERROR
    else:
        record, status = run(args.command, raw, args.seed, timestamp=not args.no_timestamp)
    text = dumps(record)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if status == EXIT_REFUSAL:
        print(f"refused: {record.get('refusal_reason')}", file=sys.stderr)
    elif status == EXIT_ERROR:
        for e in record.get("errors", [])[:5]:
            print(f"error: {e.get('error')}: {e.get('message')}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
