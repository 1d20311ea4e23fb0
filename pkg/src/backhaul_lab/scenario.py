"""Scenario files: schema, defaults, line-anchored validation and model building.

A scenario is a YAML mapping.  Every block is optional; missing keys take
the defaults in ``DEFAULTS`` (the reference parameter set at 25 dB).  The
resolved form (defaults filled in) is itself a valid scenario, so
``--dump-resolved`` output round-trips.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .channels import (
    AbsorptionModel,
    AccessLinkParams,
    FsoLinkParams,
    PointingGeometry,
    ThzLinkParams,
    thz_default_pointing,
)
from .network import HopConfig, Topology, iab_threshold

SCHEMA_VERSION = 1
ENGINES = ("closed", "asymptotic", "mc")
SWEEP_VARIABLES = ("power_db", "threshold_db", "jitter_std", "n_hops", "n_routes", "ue_position")

DEFAULTS: dict[str, Any] = {
    "schema_version": SCHEMA_VERSION,
    "name": "table2",
    "power_db": 25.0,
    "fso": {
        "wavelength_nm": 1550.0,
        "cn2": 1e-12,
        "turbulence": None,
        "visibility_km": 10.0,
        "detector": 2,
        "eta": 1.0,
        "aperture_radius": 0.2,
        "beamwidth": 0.4,
        "jitter_std": 0.05,
        "boresight": [0.0, 0.0],
        "kruse_sign": -1,
    },
    "thz": {
        "frequency_ghz": 119.0,
        "gt_dbi": 55.0,
        "gr_dbi": 55.0,
        "alpha": 2.0,
        "mu": 3.0,
        "n_rx": 2,
        "omega": 1.0,
        "aperture_radius": None,
        "beamwidth": 0.5,
        "jitter_std": 0.06,
        "boresight": [0.0, 0.0],
        "absorption": {"mode": "direct", "k_abs": 0.0},
    },
    "access": {
        "m": 2.0,
        "n_tx": 3,
        "omega": 1.0,
        "frequency_ghz": 28.0,
        "length_m": 100.0,
        "gt_dbi": 44.0,
        "gr_dbi": 44.0,
        "oxygen_db_per_km": 15.1,
        "rain_db_per_km": 0.0,
    },
    "topology": {
        "system": "S1",
        "n_hops": 1,
        "hop_length_m": 200.0,
        "links": "hybrid",
        "mode": "combining",
        "threshold_db": 0.0,
        "ue_threshold_db": None,
        "n_routes": 1,
        "iab": None,
        "ue_walk": None,
    },
    "sweep": None,
    "engines": ["closed"],
    "mc": {"samples": 10_000_000, "confidence": 0.95, "thz_sum_mode": "exact_sum"},
}

ABSORPTION_DEFAULTS = {
    "direct": {"mode": "direct", "k_abs": 0.0},
    "polynomial": {"mode": "polynomial", "table": None, "pressure": 101325.0, "temperature": 298.0, "humidity": 50.0, "band_ghz": 0.5},
}
IAB_DEFAULTS = {"ues_per_node": None, "rate": 0.1, "donor_ues": 0}
WALK_DEFAULTS = {"height_m": 30.0, "serving": None}


class ScenarioError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("\n".join(diagnostics))
        self.diagnostics = diagnostics


# --------------------------------------------------------------------------
# loading with line anchors
# --------------------------------------------------------------------------


def _line_map(node, path=(), out=None) -> dict[tuple, int]:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            _line_map(value, path + (key.value,), out)
            out.setdefault(path + (key.value,), key.start_mark.line + 1)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            _line_map(value, path + (i,), out)
    return out


@dataclass
class RawScenario:
    data: dict
    source: str
    lines: dict[tuple, int]

    def where(self, path: tuple) -> str:
        p = tuple(path)
        while p and p not in self.lines:
            p = p[:-1]
        line = self.lines.get(p, 1)
        return f"{self.source}:{line}"


def load_text(text: str, source: str = "<scenario>") -> RawScenario:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else 1
        raise ScenarioError([f"{source}:{line}: YAML parse error: {getattr(exc, 'problem', exc)}"]) from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError([f"{source}:1: scenario must be a mapping"])
    return RawScenario(data, source, _line_map(node) if node is not None else {})


def load_file(path: str | Path) -> RawScenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError([f"{path}: cannot read scenario: {exc.strerror or exc}"]) from None
    return load_text(text, str(path))


# --------------------------------------------------------------------------
# resolution and validation
# --------------------------------------------------------------------------


def _merge(default, given, path, raw, diags):
    if isinstance(default, dict) and given is not None:
        if not isinstance(given, dict):
            diags.append(f"{raw.where(path)}: {'.'.join(map(str, path))}: expected a mapping")
            return copy.deepcopy(default)
        out = copy.deepcopy(default)
        for key, value in given.items():
            if key not in default:
                diags.append(f"{raw.where(path + (key,))}: {'.'.join(map(str, path + (key,)))}: unknown field")
                continue
            out[key] = _merge(default[key], value, path + (key,), raw, diags)
        return out
    return copy.deepcopy(given)


class _Checker:
    def __init__(self, raw: RawScenario, resolved: dict, diags: list[str]):
        self.raw, self.cfg, self.diags = raw, resolved, diags

    def fail(self, path, message):
        self.diags.append(f"{self.raw.where(path)}: {'.'.join(map(str, path))}: {message}")

    def get(self, path):
        node = self.cfg
        for p in path:
            node = node[p]
        return node

    def number(self, path, lo=None, hi=None, lo_open=False, optional=False, integer=False):
        v = self.get(path)
        if v is None and optional:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {v!r}")
            return None
        if not math.isfinite(v):
            self.fail(path, "must be finite")
            return None
        if integer and int(v) != v:
            self.fail(path, f"expected an integer, got {v!r}")
            return None
        if lo is not None and (v <= lo if lo_open else v < lo):
            self.fail(path, f"must be {'>' if lo_open else '>='} {lo}, got {v!r}")
            return None
        if hi is not None and v > hi:
            self.fail(path, f"must be <= {hi}, got {v!r}")
            return None
        return v

    def choice(self, path, options):
        v = self.get(path)
        if v not in options:
            self.fail(path, f"must be one of {list(options)}, got {v!r}")
            return None
        return v

    def pair(self, path):
        v = self.get(path)
        if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            self.fail(path, "expected a two-element list of numbers")
            return None
        return v


def _check(raw: RawScenario, cfg: dict, diags: list[str]) -> None:
    c = _Checker(raw, cfg, diags)
    if cfg["schema_version"] != SCHEMA_VERSION:
        c.fail(("schema_version",), f"unsupported schema version {cfg['schema_version']!r} (expected {SCHEMA_VERSION})")
    if not isinstance(cfg["name"], str):
        c.fail(("name",), "expected a string")
    c.number(("power_db",), lo=-100, hi=200)

    f = ("fso",)
    c.number(f + ("wavelength_nm",), lo=0, lo_open=True)
    c.number(f + ("cn2",), lo=0)
    if cfg["fso"]["turbulence"] is not None:
        t = c.pair(f + ("turbulence",))
        if t and min(t) <= 0:
            c.fail(f + ("turbulence",), "alpha and beta must be positive")
    c.number(f + ("visibility_km",), lo=0, lo_open=True)
    c.choice(f + ("detector",), (1, 2))
    c.number(f + ("eta",), lo=0, lo_open=True)
    for key in ("aperture_radius", "beamwidth", "jitter_std"):
        c.number(f + (key,), lo=0, lo_open=True)
    c.pair(f + ("boresight",))
    c.choice(f + ("kruse_sign",), (-1, 1))

    t = ("thz",)
    for key in ("frequency_ghz", "alpha", "mu", "omega", "beamwidth", "jitter_std"):
        c.number(t + (key,), lo=0, lo_open=True)
    c.number(t + ("aperture_radius",), lo=0, lo_open=True, optional=True)
    c.number(t + ("gt_dbi",))
    c.number(t + ("gr_dbi",))
    c.number(t + ("n_rx",), lo=1, integer=True)
    c.pair(t + ("boresight",))
    _check_absorption(c, raw)

    if cfg["access"] is not None:
        a = ("access",)
        c.number(a + ("m",), lo=0.5)
        c.number(a + ("n_tx",), lo=1, integer=True)
        for key in ("omega", "frequency_ghz", "length_m"):
            c.number(a + (key,), lo=0, lo_open=True)
        for key in ("gt_dbi", "gr_dbi"):
            c.number(a + (key,))
        for key in ("oxygen_db_per_km", "rain_db_per_km"):
            c.number(a + (key,), lo=0)

    _check_topology(c, raw)
    _check_sweep(c)

    engines = cfg["engines"]
    if not isinstance(engines, list) or not engines:
        c.fail(("engines",), "expected a non-empty list")
    else:
        for i, e in enumerate(engines):
            if e not in ENGINES:
                c.fail(("engines", i), f"unknown engine {e!r}; choose from {list(ENGINES)}")
        if len(set(engines)) != len(engines):
            c.fail(("engines",), "duplicate engine")
    m = ("mc",)
    c.number(m + ("samples",), lo=1000, hi=10 ** 9, integer=True)
    c.number(m + ("confidence",), lo=0, hi=0.999999, lo_open=True)
    c.choice(m + ("thz_sum_mode",), ("exact_sum", "alpha_mu_approx"))

    bores = [tuple(cfg[k]["boresight"]) for k in ("fso", "thz") if isinstance(cfg[k]["boresight"], list)]
    if any(any(v != 0 for v in b) for b in bores) and isinstance(engines, list):
        for i, e in enumerate(engines):
            if e in ("closed", "asymptotic"):
                c.fail(("engines", i), "boresight requires engine mc")


def _check_absorption(c: _Checker, raw: RawScenario) -> None:
    path = ("thz", "absorption")
    block = c.get(path)
    if not isinstance(block, dict):
        c.fail(path, "expected a mapping")
        return
    mode = block.get("mode", "direct")
    if mode not in ABSORPTION_DEFAULTS:
        c.fail(path + ("mode",), f"must be 'direct' or 'polynomial', got {mode!r}")
        return
    merged = dict(ABSORPTION_DEFAULTS[mode])
    for key, value in block.items():
        if key not in merged:
            c.fail(path + (key,), f"unknown field for {mode} absorption")
        else:
            merged[key] = value
    c.cfg["thz"]["absorption"] = merged
    if mode == "direct":
        c.number(path + ("k_abs",), lo=0)
    else:
        if not isinstance(merged["table"], str):
            c.fail(path + ("table",), "polynomial absorption needs a table file path")
        for key in ("pressure", "temperature", "band_ghz"):
            c.number(path + (key,), lo=0, lo_open=True)
        c.number(path + ("humidity",), lo=0, hi=100)


def _check_topology(c: _Checker, raw: RawScenario) -> None:
    t = ("topology",)
    cfg = c.cfg["topology"]
    system = c.choice(t + ("system",), ("S1", "S2"))
    n_hops = c.number(t + ("n_hops",), lo=1, hi=64, integer=True)
    c.number(t + ("hop_length_m",), lo=0, lo_open=True)
    links = c.choice(t + ("links",), ("hybrid", "thz_only", "fso_only"))
    c.choice(t + ("mode",), ("switching", "combining"))
    c.number(t + ("threshold_db",), lo=-60, hi=60)
    c.number(t + ("ue_threshold_db",), lo=-60, hi=60, optional=True)
    n_routes = c.number(t + ("n_routes",), lo=1, hi=64, integer=True)
    if system == "S2" and links != "hybrid":
        c.fail(t + ("links",), "S2 needs hybrid links (THz chain plus end-to-end FSO)")

    if cfg["iab"] is not None:
        p = t + ("iab",)
        if not isinstance(cfg["iab"], dict):
            c.fail(p, "expected a mapping or null")
        else:
            merged = dict(IAB_DEFAULTS)
            for key, value in cfg["iab"].items():
                if key not in merged:
                    c.fail(p + (key,), "unknown field")
                else:
                    merged[key] = value
            if merged["ues_per_node"] is None and isinstance(n_hops, (int, float)):
                merged["ues_per_node"] = [10] * int(n_hops)
            cfg["iab"] = merged
            c.number(p + ("rate",), lo=0, lo_open=True)
            c.number(p + ("donor_ues",), lo=0, integer=True)
            counts = merged["ues_per_node"]
            if not (isinstance(counts, list) and all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in counts)):
                c.fail(p + ("ues_per_node",), "expected a list of non-negative integers")
            elif n_hops is not None and len(counts) != n_hops and c.cfg["sweep"] is None:
                c.fail(p + ("ues_per_node",), f"needs one entry per hop ({int(n_hops)})")
            if system == "S2" and cfg["ue_walk"] is None:
                c.fail(p, "IAB averaging is defined for S1 chains only")
            if n_routes and n_routes > 1:
                c.fail(p, "mesh routes cannot use IAB averaging")

    if cfg["ue_walk"] is not None:
        p = t + ("ue_walk",)
        if not isinstance(cfg["ue_walk"], dict):
            c.fail(p, "expected a mapping or null")
        else:
            merged = dict(WALK_DEFAULTS)
            for key, value in cfg["ue_walk"].items():
                if key not in merged:
                    c.fail(p + (key,), "unknown field")
                else:
                    merged[key] = value
            if merged["serving"] is None and isinstance(n_hops, (int, float)):
                merged["serving"] = list(range(int(n_hops) + 1))
            cfg["ue_walk"] = merged
            c.number(p + ("height_m",), lo=0)
            serving = merged["serving"]
            if not (isinstance(serving, list) and serving and all(isinstance(v, int) and not isinstance(v, bool) for v in serving)):
                c.fail(p + ("serving",), "expected a non-empty list of node indices (0 = donor)")
            elif n_hops is not None and any(v < 0 or v > n_hops for v in serving):
                c.fail(p + ("serving",), f"node indices must lie in [0, {int(n_hops)}]")
            if c.cfg["access"] is None:
                c.fail(p, "UE walk needs an access block")
            if n_routes and n_routes > 1:
                c.fail(p, "UE walk and mesh routes cannot be combined")


def _check_sweep(c: _Checker) -> None:
    sweep = c.cfg["sweep"]
    if sweep is None:
        return
    p = ("sweep",)
    if not isinstance(sweep, dict):
        c.fail(p, "expected a mapping or null")
        return
    allowed = {"variable", "values", "start", "stop", "points"}
    for key in sweep:
        if key not in allowed:
            c.fail(p + (key,), "unknown field")
    var = sweep.get("variable")
    if var not in SWEEP_VARIABLES:
        c.fail(p + ("variable",), f"must be one of {list(SWEEP_VARIABLES)}, got {var!r}")
    if "values" in sweep:
        vals = sweep["values"]
        if any(k in sweep for k in ("start", "stop", "points")):
            c.fail(p, "give either values or start/stop/points, not both")
        if not (isinstance(vals, list) and vals and all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in vals)):
            c.fail(p + ("values",), "expected a non-empty list of finite numbers")
            return
        if any(b <= a for a, b in zip(vals, vals[1:])):
            c.fail(p + ("values",), "values must be strictly increasing")
    else:
        for key in ("start", "stop", "points"):
            if key not in sweep:
                c.fail(p, f"missing {key} (or give values)")
                return
        start = c.number(p + ("start",))
        stop = c.number(p + ("stop",))
        points = c.number(p + ("points",), lo=1, hi=10_000, integer=True)
        if None not in (start, stop, points):
            if stop < start or (points > 1 and stop == start):
                c.fail(p, "sweep range must be ordered (start < stop)")
    if var in ("n_hops", "n_routes"):
        vals = sweep_values(c.cfg) if not any(d for d in c.diags if "sweep" in d) else []
        if any(int(v) != v or v < 1 for v in vals):
            c.fail(p, f"{var} sweep needs positive integers")
    if var == "jitter_std":
        vals = sweep_values(c.cfg) if not any(d for d in c.diags if "sweep" in d) else []
        if any(v <= 0 for v in vals):
            c.fail(p, "jitter_std sweep needs positive values")
    if var == "ue_position" and c.cfg["topology"]["ue_walk"] is None:
        c.fail(p + ("variable",), "ue_position sweep needs topology.ue_walk")
    if var == "n_routes" and c.cfg["topology"]["iab"] is not None:
        c.fail(p + ("variable",), "mesh routes cannot use IAB averaging")


def sweep_values(cfg: dict) -> list[float]:
    sweep = cfg["sweep"]
    if sweep is None:
        return [float(cfg["power_db"])]
    if "values" in sweep:
        return [float(v) for v in sweep["values"]]
    return [float(v) for v in np.linspace(sweep["start"], sweep["stop"], int(sweep["points"]))]


def resolve(raw: RawScenario) -> dict:
    """Defaults merged and validated; raises ScenarioError listing every problem."""
    diags: list[str] = []
    cfg = _merge(DEFAULTS, raw.data, (), raw, diags)
    for key in ("access", "sweep"):
        if key in raw.data and raw.data[key] is None:
            cfg[key] = None
    _check(raw, cfg, diags)
    if diags:
        raise ScenarioError(diags)
    return cfg


def diagnose(raw: RawScenario) -> list[str]:
    try:
        resolve(raw)
    except ScenarioError as exc:
        return exc.diagnostics
    return []


def dump(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=False, default_flow_style=None)


# --------------------------------------------------------------------------
# model building
# --------------------------------------------------------------------------


def apply_sweep(cfg: dict, value: float) -> dict:
    """Copy of ``cfg`` with the sweep variable set to ``value``."""
    out = copy.deepcopy(cfg)
    var = cfg["sweep"]["variable"] if cfg["sweep"] else "power_db"
    topo = out["topology"]
    if var == "power_db":
        out["power_db"] = value
    elif var == "threshold_db":
        topo["threshold_db"] = value
    elif var == "jitter_std":
        out["fso"]["jitter_std"] = value
        out["thz"]["jitter_std"] = value
    elif var == "n_hops":
        topo["n_hops"] = int(value)
        if topo["iab"] is not None:
            per = topo["iab"]["ues_per_node"]
            topo["iab"]["ues_per_node"] = [per[0] if per else 10] * int(value)
    elif var == "n_routes":
        topo["n_routes"] = int(value)
    return out


def _pointing(block: dict, default: PointingGeometry | None = None) -> PointingGeometry:
    radius = block["aperture_radius"]
    if radius is None:
        radius = default.aperture_radius
    return PointingGeometry(radius, block["beamwidth"], block["jitter_std"], tuple(block["boresight"]))


def build_fso(cfg: dict, length: float) -> FsoLinkParams:
    b = cfg["fso"]
    return FsoLinkParams(
        wavelength=b["wavelength_nm"] * 1e-9,
        length=length,
        cn2=b["cn2"],
        visibility_km=b["visibility_km"],
        detector=int(b["detector"]),
        eta=b["eta"],
        power=10 ** (cfg["power_db"] / 10),
        pointing=_pointing(b),
        kruse_sign=int(b["kruse_sign"]),
        turbulence=tuple(b["turbulence"]) if b["turbulence"] is not None else None,
    )


def build_absorption(block: dict) -> AbsorptionModel:
    if block["mode"] == "direct":
        return AbsorptionModel("direct", k_abs=block["k_abs"])
    env = {k: block[k] for k in ("pressure", "temperature", "humidity", "band_ghz")}
    return AbsorptionModel.from_file(block["table"], **env)


def build_thz(cfg: dict, length: float) -> ThzLinkParams:
    b = cfg["thz"]
    freq = b["frequency_ghz"] * 1e9
    default = thz_default_pointing(freq, b["gt_dbi"], b["beamwidth"], b["jitter_std"])
    return ThzLinkParams(
        frequency=freq,
        length=length,
        gt_dbi=b["gt_dbi"],
        gr_dbi=b["gr_dbi"],
        alpha=b["alpha"],
        mu=b["mu"],
        n_rx=int(b["n_rx"]),
        omega=b["omega"],
        absorption=build_absorption(b["absorption"]),
        pointing=_pointing(b, default),
        power=10 ** (cfg["power_db"] / 10),
    )


def build_access(cfg: dict, length: float | None = None) -> AccessLinkParams | None:
    b = cfg["access"]
    if b is None:
        return None
    return AccessLinkParams(
        m=b["m"],
        n_tx=int(b["n_tx"]),
        omega=b["omega"],
        frequency=b["frequency_ghz"] * 1e9,
        length=b["length_m"] if length is None else length,
        gt_dbi=b["gt_dbi"],
        gr_dbi=b["gr_dbi"],
        oxygen_db_per_km=b["oxygen_db_per_km"],
        rain_db_per_km=b["rain_db_per_km"],
        power=10 ** (cfg["power_db"] / 10),
    )


def db(value_db: float) -> float:
    return 10 ** (value_db / 10)


def build_topology(cfg: dict) -> Topology:
    t = cfg["topology"]
    n, length = int(t["n_hops"]), t["hop_length_m"]
    with_fso = t["links"] in ("hybrid", "fso_only") and t["system"] == "S1"
    with_thz = t["links"] in ("hybrid", "thz_only")
    fso = build_fso(cfg, length) if with_fso else None
    thz = build_thz(cfg, length) if with_thz else None
    hops = tuple(HopConfig(fso, thz, t["mode"], db(t["threshold_db"])) for _ in range(n))
    fso_e2e = build_fso(cfg, n * length) if t["system"] == "S2" else None
    iab = t["iab"]
    ue_th = db(t["ue_threshold_db"]) if t["ue_threshold_db"] is not None else None
    kwargs = {}
    if iab is not None and t["ue_walk"] is None and t["system"] == "S1":
        kwargs = dict(iab=True, ues_per_node=tuple(iab["ues_per_node"]), rate=iab["rate"], donor_ues=int(iab["donor_ues"]))
    return Topology(t["system"], hops, build_access(cfg), ue_th, fso_e2e, **kwargs)


def build_routes(cfg: dict) -> list[Topology]:
    topo = build_topology(cfg)
    return [topo] * int(cfg["topology"]["n_routes"])


def walk_candidates(cfg: dict, position: float) -> list[Topology]:
    """One topology per serving node for a UE at ``position`` metres from the donor.

    Node k sits k hop lengths along the chain at height ``height_m``.  The
    backhaul to node k keeps the thresholds implied by the full network's
    IAB loads.  In S2 the end-to-end FSO reaches only the last node, so
    intermediate nodes are fed by the THz chain alone.
    """
    t = cfg["topology"]
    walk = t["ue_walk"]
    full = build_topology(replace_walk_off(cfg))
    iab = t["iab"]
    hops = full.hops
    if iab is not None:
        loads = np.cumsum(iab["ues_per_node"][::-1])[::-1]
        hops = tuple(replace(h, threshold=iab_threshold(int(l), iab["rate"])) if l > 0 else h for h, l in zip(hops, loads))
    n = len(hops)
    out = []
    for k in walk["serving"]:
        dist = math.hypot(position - k * t["hop_length_m"], walk["height_m"])
        access = build_access(cfg, max(dist, 1e-3))
        if t["ue_threshold_db"] is not None:
            ue_th = db(t["ue_threshold_db"])
        elif iab is not None:
            count = int(iab["donor_ues"]) if k == 0 else int(iab["ues_per_node"][k - 1])
            ue_th = iab_threshold(max(count, 1), iab["rate"])
        else:
            ue_th = hops[-1].threshold
        if k == 0:
            out.append(("donor", access, ue_th))
        elif full.system == "S2" and k < n:
            chain = tuple(replace(h, fso=None) for h in hops[:k])
            out.append(Topology("S1", chain, access, ue_th))
        elif full.system == "S2":
            out.append(Topology("S2", hops, access, ue_th, full.fso_e2e))
        else:
            out.append(Topology("S1", hops[:k], access, ue_th))
    return out


def replace_walk_off(cfg: dict) -> dict:
    out = copy.deepcopy(cfg)
    out["topology"]["ue_walk"] = None
    return out


def metric_name(cfg: dict) -> str:
    t = cfg["topology"]
    if t["ue_walk"] is not None:
        return "ue_outage"
    if int(t["n_routes"]) > 1 or (cfg["sweep"] or {}).get("variable") == "n_routes":
        return "mesh_outage"
    if cfg["access"] is None:
        return "backhaul_outage"
    return "e2e_outage"


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------

_WALK = {"access": {}, "power_db": 30.0, "sweep": {"variable": "ue_position", "start": 0.0, "stop": 400.0, "points": 41}}

PRESETS: dict[str, dict] = {
    "table2": {
        "name": "table2",
        "access": None,
        "sweep": {"variable": "power_db", "start": 0.0, "stop": 40.0, "points": 9},
        "engines": ["closed", "mc"],
    },
    "hops_sweep": {
        "name": "hops_sweep",
        "access": None,
        "topology": {"mode": "switching", "threshold_db": 1.0},
        "sweep": {"variable": "n_hops", "values": [1, 2, 3, 4, 5]},
    },
    "mesh_routes": {
        "name": "mesh_routes",
        "thz": {"mu": 2.0},
        "topology": {"n_hops": 2, "mode": "switching", "threshold_db": 0.0},
        "sweep": {"variable": "n_routes", "values": [1, 2, 3, 4, 5]},
    },
    "threshold_sweep": {
        "name": "threshold_sweep",
        "access": None,
        "topology": {"n_hops": 2},
        "sweep": {"variable": "threshold_db", "start": -10.0, "stop": 20.0, "points": 16},
    },
    "power_sweep": {
        "name": "power_sweep",
        "access": None,
        "topology": {"n_hops": 2, "iab": {"ues_per_node": [10, 10], "rate": 0.1}},
        "sweep": {"variable": "power_db", "start": 10.0, "stop": 50.0, "points": 21},
        "engines": ["closed", "asymptotic"],
    },
    "jitter_sweep": {
        "name": "jitter_sweep",
        "access": None,
        "power_db": 30.0,
        "fso": {"aperture_radius": 0.2, "beamwidth": 0.4},
        "thz": {"aperture_radius": 0.2, "beamwidth": 0.4},
        "sweep": {"variable": "jitter_std", "start": 0.05, "stop": 0.4, "points": 15},
    },
    "boresight": {
        "name": "boresight",
        "access": None,
        "fso": {"aperture_radius": 0.1, "beamwidth": 0.5, "jitter_std": 0.2, "boresight": [0.1, 0.1]},
        "topology": {"links": "fso_only"},
        "sweep": {"variable": "power_db", "start": 20.0, "stop": 60.0, "points": 9},
        "engines": ["mc"],
        "mc": {"samples": 1_000_000},
    },
    "asymptotic": {
        "name": "asymptotic",
        "access": None,
        "topology": {"n_hops": 2},
        "sweep": {"variable": "power_db", "start": 20.0, "stop": 60.0, "points": 9},
        "engines": ["closed", "asymptotic"],
    },
}

_WALK_TOPOLOGIES = {
    1: {"n_hops": 1, "ue_walk": {"serving": [0]}},
    2: {"n_hops": 1, "ue_walk": {"serving": [1]}},
    3: {"n_hops": 1, "links": "thz_only", "ue_walk": {"serving": [1]}},
    4: {"n_hops": 1, "hop_length_m": 400.0, "ue_walk": {"serving": [1]}},
    5: {"n_hops": 2, "ue_walk": {"serving": [0, 1, 2]}},
    6: {"n_hops": 2, "system": "S2", "ue_walk": {"serving": [0, 1, 2]}},
    7: {"n_hops": 1, "hop_length_m": 400.0, "ue_walk": {"serving": [0, 1]}},
}
for _k, _topo in _WALK_TOPOLOGIES.items():
    _n = _topo["n_hops"]
    PRESETS[f"ue_walk_{_k}"] = copy.deepcopy(_WALK) | {
        "name": f"ue_walk_{_k}",
        "topology": dict(_topo, mode="switching", iab={"ues_per_node": [10] * _n, "rate": 0.1, "donor_ues": 10}),
    }


def preset(name: str) -> RawScenario:
    if name not in PRESETS:
        raise ScenarioError([f"unknown preset {name!r}; see 'presets list'"])
    text = yaml.safe_dump(PRESETS[name], sort_keys=False)
    return load_text(text, f"preset:{name}")
