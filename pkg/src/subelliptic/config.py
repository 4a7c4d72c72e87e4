"""Run configuration: a YAML document with sections frame, domain, grid, solver, options, output.

Example::

    frame: grushin            # or {name: euclidean, n: 2} or {path: my_frame.json}
    domain:
      bounds: [[-1, 1], [-1, 1]]
      mask: {type: disk, center: [0, 0], radius: 0.9}   # optional
    grid:
      resolution: 64
    solver:
      p: 2.5
    options:
      p_list: "1.5:3.0:0.5"   # sweep
      source: [0.0, 0.0]      # distance
      stencil_radius: 2       # distance
      suite: quick            # verify
    output:
      directory: out
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .eigensolve import SolverConfig
from .errors import ConfigError, ParameterError
from .frames import BUILTIN_FRAMES, VectorFieldFrame, builtin_frame, load_frame
from .grid import Disk, Domain, SubBox

SECTIONS = ("frame", "domain", "grid", "solver", "options", "output")
FRAME_KEYS = ("name", "path", "n")
DOMAIN_KEYS = ("bounds", "mask")
MASK_KEYS = {"disk": ("type", "center", "radius"), "subbox": ("type", "low", "high")}
GRID_KEYS = ("resolution",)
SOLVER_KEYS = tuple(f.name for f in dataclasses.fields(SolverConfig))
OPTION_KEYS = ("p_list", "source", "stencil_radius", "suite", "s_max")
OUTPUT_KEYS = ("directory",)
SUITE_NAMES = ("quick", "full", "config")


@dataclass(frozen=True)
class RunConfig:
    frame: dict
    domain: dict
    resolution: tuple[int, ...]
    solver: SolverConfig
    options: dict = field(default_factory=dict)
    output_dir: str = "."
    present_options: tuple[str, ...] = ()

    @property
    def ndim(self) -> int:
        return len(self.domain["bounds"])

    def build_frame(self) -> VectorFieldFrame:
        if self.frame.get("path"):
            return load_frame(self.frame["path"])
        return builtin_frame(self.frame["name"], self.frame.get("n"))

    def build_domain(self) -> Domain:
        bounds = tuple(tuple(b) for b in self.domain["bounds"])
        mask = self.domain.get("mask")
        if mask is None:
            return Domain(bounds)
        if mask["type"] == "disk":
            return Domain(bounds, Disk(tuple(mask["center"]), mask["radius"]))
        return Domain(bounds, SubBox(tuple(mask["low"]), tuple(mask["high"])))

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "domain": self.domain,
            "grid": {"resolution": list(self.resolution)},
            "solver": dataclasses.asdict(self.solver),
            "options": self.options,
            "output": {"directory": self.output_dir},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @property
    def digest(self) -> str:
        """sha256 of the canonical effective configuration."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _line_map(node, prefix: str = "", out: dict | None = None) -> dict:
    """Dotted key path -> 1-based line of the key in the source document."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            path = f"{prefix}.{k.value}" if prefix else str(k.value)
            out[path] = k.start_mark.line + 1
            _line_map(v, path, out)
    return out


class _Reader:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, msg: str, key: str):
        line = self.lines.get(key)
        while line is None and "." in key:
            key_up = key.rsplit(".", 1)[0]
            line = self.lines.get(key_up)
            key = key_up if line is None else key
        raise ConfigError(msg, key=key, line=line)

    def section(self, data, name: str, allowed) -> dict:
        if data is None:
            return {}
        if not isinstance(data, dict):
            self.fail(f"section '{name}' must be a mapping", name)
        for k in data:
            if k not in allowed:
                self.fail(f"unknown key '{k}'", f"{name}.{k}")
        return data

    def number(self, value, key: str, integer: bool = False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(f"expected a number, got {value!r}", key)
        if integer and not float(value).is_integer():
            self.fail(f"expected an integer, got {value!r}", key)
        return int(value) if integer else float(value)

    def vector(self, value, key: str, length: int | None = None) -> list[float]:
        if not isinstance(value, (list, tuple)):
            self.fail(f"expected a list of numbers, got {value!r}", key)
        out = [self.number(v, key) for v in value]
        if length is not None and len(out) != length:
            self.fail(f"expected {length} entries, got {len(out)}", key)
        return out


def parse_p_list(value) -> list[float]:
    """``[1.5, 2, 3]`` or the inclusive range string ``"start:stop:step"``."""
    if isinstance(value, str):
        parts = [float(s) for s in value.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ValueError(f"bad range {value!r}; use start:stop:step")
        start, stop, step = parts
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [float(round(start + k * step, 12)) for k in range(count)]
    return [float(p) for p in value]


def parse_config(text: str) -> RunConfig:
    """Validate a configuration document and fill in defaults.

    Raises ``ConfigError`` naming the offending key and its line.
    """
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed document: {exc}", line=mark.line + 1 if mark else None) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    rd = _Reader(_line_map(node))
    for k in data:
        if k not in SECTIONS:
            rd.fail(f"unknown key '{k}'", str(k))

    # frame
    fr = data.get("frame")
    if fr is None:
        rd.fail("missing section 'frame'", "frame")
    if isinstance(fr, str):
        fr = {"name": fr}
    fr = dict(rd.section(fr, "frame", FRAME_KEYS))
    if ("name" in fr) == ("path" in fr):
        rd.fail("give exactly one of 'name' or 'path'", "frame")
    if "name" in fr and fr["name"] not in BUILTIN_FRAMES:
        rd.fail(f"unknown frame {fr['name']!r}; built-ins are {sorted(BUILTIN_FRAMES)}", "frame.name")
    if "n" in fr:
        fr["n"] = rd.number(fr["n"], "frame.n", integer=True)
        if fr["n"] < 1:
            rd.fail("n must be >= 1", "frame.n")

    # domain
    dom = rd.section(data.get("domain"), "domain", DOMAIN_KEYS)
    if "bounds" not in dom:
        rd.fail("missing 'bounds'", "domain")
    raw = dom["bounds"]
    if not isinstance(raw, list) or not raw:
        rd.fail("bounds must be a list of [low, high] pairs", "domain.bounds")
    bounds = [rd.vector(b, "domain.bounds", 2) for b in raw]
    if any(hi <= lo for lo, hi in bounds):
        rd.fail("every bound needs low < high", "domain.bounds")
    n = len(bounds)
    domain = {"bounds": bounds}
    if dom.get("mask") is not None:
        mask = dom["mask"]
        kind = mask.get("type") if isinstance(mask, dict) else None
        if kind not in MASK_KEYS:
            rd.fail(f"mask type must be one of {sorted(MASK_KEYS)}", "domain.mask")
        rd.section(mask, "domain.mask", MASK_KEYS[kind])
        if kind == "disk":
            radius = rd.number(mask.get("radius"), "domain.mask.radius")
            if radius <= 0:
                rd.fail("radius must be positive", "domain.mask.radius")
            domain["mask"] = {"type": "disk", "center": rd.vector(mask.get("center"), "domain.mask.center", n), "radius": radius}
        else:
            domain["mask"] = {
                "type": "subbox",
                "low": rd.vector(mask.get("low"), "domain.mask.low", n),
                "high": rd.vector(mask.get("high"), "domain.mask.high", n),
            }

    # frame dimension against the box
    if "name" in fr:
        if fr["name"] == "euclidean":
            fr.setdefault("n", n)
        expected = {"grushin": 2, "heisenberg": 3}.get(fr["name"], fr.get("n"))
        if expected != n:
            rd.fail(f"dimension mismatch: frame '{fr['name']}' lives in R^{expected} but bounds are {n}-dimensional", "domain.bounds")

    # grid
    gr = rd.section(data.get("grid"), "grid", GRID_KEYS)
    if "resolution" not in gr:
        rd.fail("missing 'resolution'", "grid")
    res = gr["resolution"]
    res = [res] * n if not isinstance(res, list) else res
    if len(res) != n:
        rd.fail(f"resolution needs {n} entries", "grid.resolution")
    res = tuple(rd.number(r, "grid.resolution", integer=True) for r in res)
    if min(res) < 4:
        rd.fail("resolution must be >= 4", "grid.resolution")

    # solver
    sv = dict(rd.section(data.get("solver"), "solver", SOLVER_KEYS))
    defaults = SolverConfig()
    for k, v in sv.items():
        kind = type(getattr(defaults, k))
        if kind is str:
            if not isinstance(v, str):
                rd.fail(f"expected text, got {v!r}", f"solver.{k}")
        else:
            sv[k] = rd.number(v, f"solver.{k}", integer=kind is int)
    try:
        solver = SolverConfig(**sv)
    except ParameterError as exc:
        key = next((k for k in sv if k in str(exc)), None) or next(iter(sv), "p")
        rd.fail(str(exc), f"solver.{key}")

    # options
    op = dict(rd.section(data.get("options"), "options", OPTION_KEYS))
    present = tuple(op)
    options = {"stencil_radius": 2, "suite": "quick", "s_max": 4}
    if "p_list" in op:
        try:
            plist = parse_p_list(op["p_list"])
        except (ValueError, TypeError) as exc:
            rd.fail(str(exc), "options.p_list")
        if not plist or any(not p > 1 for p in plist):
            rd.fail("every p must be > 1", "options.p_list")
        options["p_list"] = plist
    if "source" in op:
        options["source"] = rd.vector(op["source"], "options.source", n)
    for k in ("stencil_radius", "s_max"):
        if k in op:
            options[k] = rd.number(op[k], f"options.{k}", integer=True)
            if options[k] < 1:
                rd.fail(f"{k} must be >= 1", f"options.{k}")
    if "suite" in op:
        if op["suite"] not in SUITE_NAMES:
            rd.fail(f"suite must be one of {SUITE_NAMES}", "options.suite")
        options["suite"] = op["suite"]

    out = rd.section(data.get("output"), "output", OUTPUT_KEYS)
    outdir = out.get("directory", ".")
    if not isinstance(outdir, str):
        rd.fail("directory must be text", "output.directory")

    return RunConfig(fr, domain, res, solver, options, outdir, present)
