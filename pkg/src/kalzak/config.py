"""Config ingestion, run manifests, and table export.

Configs are TOML with a published JSON-schema twin (schemas/
config.schema.json); loading validates structurally against the schema
and then semantically (step divides horizon, snapshots on the step
grid, and so on) with messages naming the offending fields.  Every run
directory gets a manifest whose id is a hash of the canonical config
plus seed and version, and every exported table cites that id in a
header comment: replaying a manifest reproduces the numbers bit for
bit, so diffing exports is a meaningful regression check.
"""

from __future__ import annotations

import datetime
import hashlib
import importlib
import importlib.resources
import json
from dataclasses import asdict, dataclass

import numpy as np

try:
    import tomllib
except ImportError:
    import tomli as tomllib

import jsonschema

from . import __version__
from . import _backends
from . import models
from .errors import ConfigError
from .riccati import QuadraticForm

__all__ = [
    "load_config",
    "build_model",
    "build_q0",
    "config_hash",
    "RunManifest",
    "make_manifest",
    "load_manifest",
    "write_csv",
    "write_json_export",
]

_EXPLICIT_SHAPES = {
    "theta": ("d", "dw"), "Theta": ("dy", "dw"), "bdot": ("d", "d"),
    "b0": ("d",), "Bdot": ("d", "dy"), "B0": ("dy",),
}

_PRESETS = {
    "classic_scalar": lambda p: models.classic_scalar(),
    "scalar_correlated": lambda p: models.scalar_correlated(
        rho=float(p.get("rho", 0.5))),
    "silent_observation": lambda p: models.silent_observation(
        rho=float(p.get("rho", 0.5))),
    "random_bounded": lambda p: models.random_bounded(
        seed=int(p.get("seed", 0)),
        y_dependent=bool(p.get("y_dependent", False))),
}


def _schema() -> dict:
    text = (importlib.resources.files("kalzak") / "schemas"
            / "config.schema.json").read_text()
    return json.loads(text)


def load_config(path) -> dict:
    """Parse and validate a TOML run config, returning the raw dict."""
    try:
        with open(path, "rb") as fh:
            cfg = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error in {path}: {exc}")
    try:
        jsonschema.validate(cfg, _schema())
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "(top level)"
        raise ConfigError(f"config schema violation at {where}: {exc.message}")
    _semantic_checks(cfg)
    return cfg


def _divides(dt: float, T: float) -> bool:
    n = round(T / dt)
    return n >= 1 and abs(n * dt - T) <= 1e-9 * max(1.0, abs(T))


def _semantic_checks(cfg: dict):
    sim = cfg["simulation"]
    if sim["dt"] <= 0 or sim["T"] <= 0:
        raise ConfigError("simulation.dt and simulation.T must be positive")
    if not _divides(sim["dt"], sim["T"]):
        raise ConfigError(
            f"simulation.dt = {sim['dt']} does not divide simulation.T = "
            f"{sim['T']}: the horizon must be an integer number of steps"
        )
    zk = cfg.get("zakai", {})
    for t in zk.get("snapshots", []):
        if not _divides(sim["dt"], t) and t != 0.0:
            raise ConfigError(
                f"zakai.snapshots entry {t} is not on the simulation.dt = "
                f"{sim['dt']} grid"
            )
        if t > sim["T"] + 1e-12:
            raise ConfigError(
                f"zakai.snapshots entry {t} lies beyond simulation.T = {sim['T']}"
            )
    tb = cfg.get("testbed", {})
    if tb and not _divides(tb.get("dt", sim["dt"]), tb.get("T", sim["T"])):
        raise ConfigError("testbed.dt does not divide testbed.T")
    oc = cfg.get("oracle", {})
    thr = oc.get("resample_threshold", 0.5)
    if not 0.0 < thr <= 1.0:
        raise ConfigError(
            f"oracle.resample_threshold = {thr} must lie in (0, 1]"
        )
    model = cfg["model"]
    if "preset" in model:
        if model["preset"] not in _PRESETS:
            raise ConfigError(
                f"model.preset {model['preset']!r} unknown; choose from "
                f"{sorted(_PRESETS)}"
            )
    elif model.get("family") != "explicit":
        raise ConfigError("model needs either a preset or family = 'explicit'")


def _coefficient(name: str, raw, shape) -> models.Coefficient:
    if isinstance(raw, dict):
        kind = raw.get("kind")
        if kind == "constant":
            return models.constant(np.asarray(raw["value"], float).reshape(shape))
        if kind == "affine_clipped":
            return models.affine_clipped(
                np.asarray(raw["base"], float).reshape(shape),
                np.asarray(raw["slope"], float).reshape(shape),
                float(raw["bound"]), direction=raw.get("direction"))
        if kind == "sigmoid":
            return models.sigmoid(
                np.asarray(raw["base"], float).reshape(shape),
                np.asarray(raw["amp"], float).reshape(shape),
                scale=float(raw.get("scale", 1.0)),
                direction=raw.get("direction"))
        if kind == "plugin":
            target = raw["target"]
            mod_name, _, attr = target.partition(":")
            if not attr:
                raise ConfigError(
                    f"model.coefficients.{name}: plugin target must look "
                    f"like 'package.module:function', got {target!r}"
                )
            try:
                fn = getattr(importlib.import_module(mod_name), attr)
            except (ImportError, AttributeError) as exc:
                raise ConfigError(
                    f"model.coefficients.{name}: cannot load plugin "
                    f"{target!r} ({exc})"
                )
            return models.from_callable(fn, shape)
        raise ConfigError(
            f"model.coefficients.{name}: unknown kind {kind!r}"
        )
    return models.constant(np.asarray(raw, float).reshape(shape))


def build_model(cfg: dict) -> models.ModelSpec:
    """Construct the model the config describes (preset or explicit)."""
    model = cfg["model"]
    if "preset" in model:
        return _PRESETS[model["preset"]](model)
    dims = {k: int(model[k]) for k in ("d", "dy", "dw")}
    coeffs = model.get("coefficients", {})
    missing = sorted(set(_EXPLICIT_SHAPES) - set(coeffs))
    if missing:
        raise ConfigError(
            f"model.coefficients is missing {', '.join(missing)}"
        )
    built = {}
    for name, dim_names in _EXPLICIT_SHAPES.items():
        shape = tuple(dims[dn] for dn in dim_names)
        try:
            built[name] = _coefficient(name, coeffs[name], shape)
        except ValueError as exc:
            raise ConfigError(f"model.coefficients.{name}: {exc}")
    return models.ModelSpec(label=model.get("label", "explicit"),
                            **dims, **built)


def build_q0(cfg: dict, d: int) -> QuadraticForm:
    """Initial quadratic form from the filter block (isotropic default)."""
    blk = cfg.get("filter", {})
    if "q0_w" in blk:
        w = np.asarray(blk["q0_w"], float).reshape(d, d)
        v = np.asarray(blk.get("q0_v", np.zeros(d)), float).reshape(d)
        return QuadraticForm(W=w, V=v, U=float(blk.get("q0_u", 0.0)))
    return QuadraticForm.isotropic(d, eps=float(blk.get("q0_eps", 1.0)))


def config_hash(cfg: dict) -> str:
    """Order-independent hash of the config contents."""
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class RunManifest:
    """Reproducibility record written next to every run's outputs.

    manifest_id covers config, master seed, and artifact version, so
    two runs with the same id are byte-identical claims.  created is
    informational and excluded from the id.
    """

    manifest_id: str
    config_hash: str
    master_seed: int
    command: str
    version: str
    backend: str
    libraries: dict
    per_path_seed_rule: str
    label: str
    created: str
    config: dict
    acceptance: dict | None = None

    def write(self, path):
        # serialize first so a TypeError cannot leave a truncated file behind
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        with open(path, "w") as fh:
            fh.write(text + "\n")


def make_manifest(cfg: dict, command: str, seed: int | None = None) -> RunManifest:
    import scipy

    chash = config_hash(cfg)
    master = int(cfg["simulation"]["seed"] if seed is None else seed)
    ident = hashlib.sha256(
        f"{chash}:{master}:{__version__}".encode()).hexdigest()[:16]
    return RunManifest(
        manifest_id=ident,
        config_hash=chash,
        master_seed=master,
        command=command,
        version=__version__,
        backend=_backends.active_name(),
        libraries={"numpy": np.__version__, "scipy": scipy.__version__},
        per_path_seed_rule="SeedSequence(master_seed, spawn_key=(path_index,))",
        label=str(cfg.get("label", "")),
        created=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        config=cfg,
    )


def load_manifest(path) -> RunManifest:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"missing manifest: {path}")
    return RunManifest(**data)


def write_csv(path, columns, manifest_id: str, comment: str = ""):
    """Write named columns as CSV with the manifest id in a header comment.

    columns is a sequence of (name, 1-D array) pairs of equal length.
    Floats print with repr-exact precision, so identical arrays give
    identical bytes.
    """
    names = [c[0] for c in columns]
    arrays = [np.asarray(c[1]) for c in columns]
    n = len(arrays[0]) if arrays else 0
    for name, arr in zip(names, arrays):
        if len(arr) != n:
            raise ValueError(f"column {name} has length {len(arr)}, not {n}")
    with open(path, "w") as fh:
        fh.write(f"# manifest: {manifest_id}\n")
        if comment:
            fh.write(f"# {comment}\n")
        fh.write(",".join(names) + "\n")
        for i in range(n):
            fh.write(",".join(_cell(arr[i]) for arr in arrays) + "\n")


def _cell(v) -> str:
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return str(v)


def write_json_export(path, kind: str, columns, manifest_id: str,
                      meta: dict | None = None):
    """JSON twin of a CSV table, matching schemas/export.schema.json."""
    doc = {
        "manifest": manifest_id,
        "kind": kind,
        "columns": {name: np.asarray(arr).tolist() for name, arr in columns},
        "meta": meta or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")
