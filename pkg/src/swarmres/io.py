"""File formats: scenario and mission JSON, CSV tables, run manifests.

JSON loaders report validation failures as ``file:line: path: message`` so a
bad entry can be found in a hand-edited file.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import platform
import tempfile
from json import JSONDecodeError
from pathlib import Path

from . import __version__
from .layered import LayeredNetwork, LayeredNetworkError, build_layered
from .mission import MissionPlan, Phase


class ConfigError(ValueError):
    """Invalid input file or configuration (CLI exit code 2)."""


def fmt(x) -> str:
    """Floats with 12 significant digits; everything else via str()."""
    if isinstance(x, float) or hasattr(x, "dtype"):
        v = float(x)
        if v == 0:
            return "0"
        return format(v, ".12g")
    return str(x)


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_csv(path, header, rows) -> None:
    import io as _io
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(c) for c in row])
    atomic_write_text(path, buf.getvalue())


def read_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _round_floats(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def write_json(path, obj, round_floats: bool = True) -> None:
    if round_floats:
        obj = _round_floats(obj)
    atomic_write_text(path, json.dumps(obj, indent=1, sort_keys=False) + "\n")


def config_digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_manifest(out_dir, command: str, config: dict, seed, wall_time: float) -> None:
    import networkx
    import numpy
    import scipy
    manifest = {
        "command": command,
        "config": config,
        "config_digest": config_digest(config),
        "seed": seed,
        "wall_time_s": round(wall_time, 3),
        "versions": {"swarmres": __version__, "python": platform.python_version(),
                     "numpy": numpy.__version__, "scipy": scipy.__version__,
                     "networkx": networkx.__version__},
    }
    atomic_write_text(Path(out_dir) / "manifest.json", json.dumps(manifest, indent=1, default=str) + "\n")


# --- JSON with value positions ------------------------------------------------

_WS = " \t\n\r"


def _locate(text: str) -> dict:
    """Map JSON paths (tuples of keys/indices) to the character offset of their value."""
    scan = json.JSONDecoder().scan_once
    where = {}

    def skip(i):
        while i < len(text) and text[i] in _WS:
            i += 1
        return i

    def walk(i, path):
        i = skip(i)
        where[path] = i
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = scan(text, skip(i))
                i = skip(i)
                i = walk(i + 1, path + (key,))  # past ':'
                i = skip(i)
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = skip(walk(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = scan(text, i)
        return end

    walk(0, ())
    return where


class _Anchored:
    def __init__(self, path, text):
        self.path = str(path)
        self.text = text
        self._where = None

    def error(self, keys, message) -> ConfigError:
        if self._where is None:
            self._where = _locate(self.text)
        keys = tuple(keys)
        while keys not in self._where and keys:
            keys = keys[:-1]
        line = self.text.count("\n", 0, self._where.get(keys, 0)) + 1
        dotted = "".join(f"[{k}]" if isinstance(k, int) else f".{k}" for k in keys).lstrip(".")
        return ConfigError(f"{self.path}:{line}: {dotted or '<root>'}: {message}")


def _load_json(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    return data, _Anchored(path, text)


def _require(doc, anchor, key, kind, keys=()):
    if key not in doc:
        raise anchor.error(keys, f"missing required field '{key}'")
    val = doc[key]
    if kind is int and not (isinstance(val, int) and not isinstance(val, bool) and val >= 0):
        raise anchor.error(keys + (key,), "expected a non-negative integer")
    if kind is float and not (isinstance(val, (int, float)) and not isinstance(val, bool)):
        raise anchor.error(keys + (key,), "expected a number")
    if kind is list and not isinstance(val, list):
        raise anchor.error(keys + (key,), "expected an array")
    return val


def _edges(doc, anchor, key):
    out = []
    for k, e in enumerate(doc.get(key, [])):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(c, int) and c >= 0 for c in e)):
            raise anchor.error((key, k), "edge must be a pair of non-negative integer ids")
        out.append(tuple(e))
    return out


def _phases_from(items, anchor, keys):
    phases = []
    for k, ph in enumerate(items):
        pk = keys + (k,)
        if not isinstance(ph, dict):
            raise anchor.error(pk, "phase must be an object")
        nodes = _require(ph, anchor, "nodes", list, pk)
        duration = _require(ph, anchor, "duration_s", float, pk)
        if not duration > 0:
            raise anchor.error(pk + ("duration_s",), "phase duration must be positive")
        beta = ph.get("beta", 1.0)
        if not isinstance(beta, (int, float)) or beta < 0:
            raise anchor.error(pk + ("beta",), "beta must be a non-negative number")
        phases.append(Phase(frozenset(nodes), float(duration), float(beta),
                            ph.get("m_required"), ph.get("n_required")))
    return phases


def mission_from_dict(doc, anchor) -> MissionPlan:
    phases = _phases_from(_require(doc, anchor, "phases", list), anchor, ("phases",))
    if not phases:
        raise anchor.error(("phases",), "at least one phase is required")
    rates = doc.get("base_rates", {})
    if isinstance(rates, list):
        rates = dict(enumerate(rates))
    elif isinstance(rates, dict):
        rates = {int(k): v for k, v in rates.items()}
    else:
        raise anchor.error(("base_rates",), "expected an object or array")
    for node, rate in rates.items():
        if not isinstance(rate, (int, float)) or rate < 0:
            raise anchor.error(("base_rates",), f"rate of node {node} must be a non-negative number")
    stress = {}
    raw = doc.get("stress", [])
    if isinstance(raw, list):
        for k, entry in enumerate(raw):
            if not (isinstance(entry, list) and len(entry) == 4):
                raise anchor.error(("stress", k), "stress entry must be [node, p, j, xi]")
            node, p, j, xi = entry
            if xi < 1:
                raise anchor.error(("stress", k), "stress factor must be >= 1")
            stress[(int(node), int(p), int(j))] = float(xi)
    else:
        raise anchor.error(("stress",), "expected an array of [node, p, j, xi]")
    eta = doc.get("eta", 0.0)
    if not isinstance(eta, (int, float)) or eta < 0:
        raise anchor.error(("eta",), "eta must be a non-negative number")
    return MissionPlan(tuple(phases), {k: float(v) for k, v in rates.items()}, stress, float(eta))


def mission_to_dict(plan: MissionPlan) -> dict:
    return {
        "phases": [{"nodes": sorted(p.nodes), "duration_s": p.duration, "beta": p.beta,
                    "m_required": p.uav_required, "n_required": p.usv_required}
                   for p in plan.phases],
        "stress": [[n, p, j, xi] for (n, p, j), xi in sorted(plan.stress.items())],
        "base_rates": {str(k): v for k, v in sorted(plan.base_rates.items())},
        "eta": plan.eta,
    }


def load_mission(path) -> MissionPlan:
    doc, anchor = _load_json(path)
    if not isinstance(doc, dict):
        raise anchor.error((), "mission file must hold a JSON object")
    return mission_from_dict(doc, anchor)


def save_mission(plan: MissionPlan, path) -> None:
    write_json(path, mission_to_dict(plan), round_floats=False)


def scenario_to_dict(net: LayeredNetwork, plan: MissionPlan | None = None) -> dict:
    def edges(g):
        return sorted([min(u, v), max(u, v)] for u, v in g.edges)

    doc = {"n": net.n, "m": net.m, "x": net.x, "y": net.y, "z": net.z,
           "positions": [list(net.positions[v]) for v in range(net.n + net.m)],
           "comm_edges": edges(net.comm), "struct_edges": edges(net.struct_),
           "task_edges": edges(net.task)}
    destroyed = sorted(set(range(net.n + net.m)) - set(net.struct_.nodes))
    if destroyed:
        doc["destroyed"] = destroyed
    doc["phases"] = mission_to_dict(plan)["phases"] if plan is not None else []
    return doc


def _without_vehicles(net: LayeredNetwork, vehicles) -> LayeredNetwork:
    comm, struct_, task = net.comm.copy(), net.struct_.copy(), net.task.copy()
    for v in vehicles:
        task.remove_nodes_from([u for u in net.payloads_of(v) if u in task])
        comm.remove_nodes_from([net.phi(v)])
        struct_.remove_nodes_from([v])
    return net.with_layers(comm, struct_, task)


def load_scenario(path) -> tuple:
    """Return ``(LayeredNetwork, MissionPlan or None)`` from a scenario file."""
    doc, anchor = _load_json(path)
    if not isinstance(doc, dict):
        raise anchor.error((), "scenario file must hold a JSON object")
    n, m, x, y = (_require(doc, anchor, k, int) for k in ("n", "m", "x", "y"))
    z = doc.get("z", 1)
    positions = _require(doc, anchor, "positions", list)
    if len(positions) != n + m:
        raise anchor.error(("positions",), f"expected {n + m} positions, found {len(positions)}")
    for k, p in enumerate(positions):
        if not (isinstance(p, list) and len(p) == 3 and all(isinstance(c, (int, float)) for c in p)):
            raise anchor.error(("positions", k), "position must be [x, y, z] in meters")
        if k >= n and p[2] != 0:
            raise anchor.error(("positions", k), "USV positions must have z = 0")
    edges = {key: _edges(doc, anchor, key) for key in ("comm_edges", "struct_edges", "task_edges")}
    for key, limit in (("comm_edges", n + m), ("struct_edges", n + m), ("task_edges", n * x + m * y)):
        for k, (u, v) in enumerate(edges[key]):
            if u >= limit or v >= limit or u == v:
                raise anchor.error((key, k), f"edge ({u}, {v}) is a self-loop or references a missing node")
    try:
        net = build_layered(n, m, x, y, edges["comm_edges"], edges["struct_edges"], edges["task_edges"],
                            dict(enumerate(positions)), z=z)
    except LayeredNetworkError as exc:
        raise anchor.error((), str(exc)) from None
    destroyed = doc.get("destroyed", [])
    if not (isinstance(destroyed, list) and all(isinstance(v, int) and 0 <= v < n + m for v in destroyed)):
        raise anchor.error(("destroyed",), "expected a list of vehicle ids")
    if destroyed:
        net = _without_vehicles(net, destroyed)
    plan = None
    if doc.get("phases"):
        phases = _phases_from(doc["phases"], anchor, ("phases",))
        for k, ph in enumerate(phases):
            if not ph.nodes <= set(range(n + m)):
                raise anchor.error(("phases", k, "nodes"), "phase references unknown vehicles")
        plan = MissionPlan(tuple(phases))
    return net, plan


def save_scenario(net: LayeredNetwork, path, plan: MissionPlan | None = None) -> None:
    doc = scenario_to_dict(net, plan)
    # one array entry per line keeps error messages line-anchored
    lines = ["{"]
    items = list(doc.items())
    for k, (key, val) in enumerate(items):
        sep = "," if k < len(items) - 1 else ""
        if isinstance(val, list) and val:
            lines.append(f' "{key}": [')
            for i, entry in enumerate(val):
                lines.append("  " + json.dumps(entry) + ("," if i < len(val) - 1 else ""))
            lines.append(f" ]{sep}")
        else:
            lines.append(f' "{key}": {json.dumps(val)}{sep}')
    lines.append("}")
    atomic_write_text(path, "\n".join(lines) + "\n")
