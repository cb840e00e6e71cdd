"""Scenario files: a line-oriented key-value format with nested sections.

Grammar (documented here and in the README):

  - one statement per line: ``key value`` binds a scalar, a bare ``key``
    opens a section whose children are indented two more spaces;
  - indentation is exactly two spaces per level, tabs are rejected;
  - ``#`` starts a comment (full line or trailing); blank lines are ignored;
  - repeating a key collects the values into a list, in file order;
  - scalars parse as int, then float, then true/false, else string.

emit_config writes the canonical form; parse(emit(tree)) reproduces the
tree exactly, which keeps scenario files diffable and machine-editable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .geometry import (
    ClosedBall,
    ConformalCircle,
    Euclidean,
    FiniteUnionOfBalls,
    Hyperbolic,
    Model,
    Point,
    Sphere,
    Torus,
    WholeSpace,
)
from .potentials import (
    Bump,
    Constant,
    LogSingularity,
    PowerSingularity,
    Sum,
    Truncated,
)


class ConfigError(ValueError):
    """Malformed scenario text or unresolvable descriptor."""


# ---------------------------------------------------------------------------
# parsing


def _parse_scalar(tok: str):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        return float(tok)
    except ValueError:
        pass
    if tok == "true":
        return True
    if tok == "false":
        return False
    return tok


def _insert(node: dict, key: str, value):
    if key in node:
        cur = node[key]
        if isinstance(cur, list):
            cur.append(value)
        else:
            node[key] = [cur, value]
    else:
        node[key] = value


def parse_config(text: str) -> dict:
    """Parse scenario text into a nested dict tree."""
    root: dict = {}
    stack: list[dict] = [root]
    for lineno, raw in enumerate(text.splitlines(), 1):
        if "\t" in raw:
            raise ConfigError(f"line {lineno}: tab characters are not allowed")
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip(" "))
        if indent % 2:
            raise ConfigError(f"line {lineno}: indentation must be a multiple of two spaces")
        level = indent // 2
        if level >= len(stack):
            raise ConfigError(f"line {lineno}: indented too deep for its parent")
        del stack[level + 1 :]
        parts = line.strip().split(None, 1)
        key = parts[0]
        if len(parts) == 1:
            child: dict = {}
            _insert(stack[level], key, child)
            stack.append(child)
        else:
            _insert(stack[level], key, _parse_scalar(parts[1]))
    return root


def _emit_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _emit_node(node: dict, level: int, out: list[str]) -> None:
    pad = "  " * level
    for key, value in node.items():
        values = value if isinstance(value, list) else [value]
        for v in values:
            if isinstance(v, dict):
                out.append(f"{pad}{key}")
                _emit_node(v, level + 1, out)
            else:
                out.append(f"{pad}{key} {_emit_scalar(v)}")


def emit_config(tree: dict) -> str:
    out: list[str] = []
    _emit_node(tree, 0, out)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# descriptor builders


def _as_list(v):
    if v is None:
        return []
    return v if isinstance(v, list) else [v]


def _floats(node, key, default=()):
    return tuple(float(x) for x in _as_list(node.get(key))) or tuple(default)


def chart_origin(model: Model) -> Point:
    """A canonical base point in each model's chart."""
    if isinstance(model, Sphere) and model.m > 1:
        coords = (math.pi / 2,) + (0.0,) * (model.m - 1)
        return Point(model, coords)
    return Point(model, (0.0,) * model.m)


def build_model(node) -> Model:
    """Model from a config section or an inline descriptor string.

    Inline forms: euclidean:2, torus:6.2832, sphere:1:1.0, hyperbolic:3:1.0,
    conformal:<const>[:<cos1>[:<sin1>]].
    """
    if isinstance(node, str):
        parts = node.split(":")
        kind, args = parts[0], parts[1:]
        node = {"kind": kind}
        try:
            if kind == "euclidean":
                node["dim"] = int(args[0])
            elif kind == "torus":
                node["period"] = [float(a) for a in args] or [2 * math.pi]
            elif kind == "sphere":
                node["dim"] = int(args[0]) if args else 1
                node["radius"] = float(args[1]) if len(args) > 1 else 1.0
            elif kind == "hyperbolic":
                node["dim"] = int(args[0]) if args else 2
                node["kappa"] = float(args[1]) if len(args) > 1 else 1.0
            elif kind == "conformal":
                node["const"] = float(args[0]) if args else 0.0
                if len(args) > 1:
                    node["cos"] = float(args[1])
                if len(args) > 2:
                    node["sin"] = float(args[2])
            else:
                raise ConfigError(f"unknown model kind {kind!r}")
        except (ValueError, IndexError) as e:
            raise ConfigError(f"bad model descriptor {node!r}: {e}") from None
    if not isinstance(node, dict) or "kind" not in node:
        raise ConfigError("model needs a kind")
    kind = node["kind"]
    if kind == "euclidean":
        return Euclidean(int(node.get("dim", 2)))
    if kind == "torus":
        periods = _floats(node, "period", (2 * math.pi,))
        return Torus(len(periods), periods)
    if kind == "sphere":
        return Sphere(int(node.get("dim", 1)), float(node.get("radius", 1.0)))
    if kind == "hyperbolic":
        return Hyperbolic(int(node.get("dim", 2)), float(node.get("kappa", 1.0)))
    if kind == "conformal":
        return ConformalCircle(
            float(node.get("const", 0.0)), _floats(node, "cos"), _floats(node, "sin")
        )
    raise ConfigError(f"unknown model kind {kind!r}")


def _center(node, model: Model) -> Point:
    coords = _floats(node, "center")
    if not coords:
        return chart_origin(model)
    if len(coords) != model.m:
        raise ConfigError(f"center needs {model.m} coordinates")
    return Point(model, coords)


def build_region(node, model: Model):
    """Region from a config section or inline 'whole' / 'ball:<radius>'."""
    if node is None:
        return None
    if isinstance(node, str):
        parts = node.split(":")
        if parts[0] == "whole":
            return WholeSpace()
        if parts[0] == "ball":
            try:
                return ClosedBall(chart_origin(model), float(parts[1]))
            except (ValueError, IndexError) as e:
                raise ConfigError(f"bad region descriptor {node!r}: {e}") from None
        raise ConfigError(f"unknown region kind {parts[0]!r}")
    kind = node.get("kind", "ball")
    if kind == "whole":
        return WholeSpace()
    if kind == "ball":
        return ClosedBall(_center(node, model), float(node.get("radius", 1.0)))
    if kind == "union":
        balls = [build_region(b, model) for b in _as_list(node.get("ball"))]
        if not all(isinstance(b, ClosedBall) for b in balls):
            raise ConfigError("union regions take ball subsections")
        return FiniteUnionOfBalls(tuple(balls))
    raise ConfigError(f"unknown region kind {kind!r}")


def build_potential(node, model: Model):
    """Potential from a config section or an inline descriptor string.

    Inline forms (centered at the chart origin): constant:<c>,
    power:<exponent>[:<cutoff>[:<amplitude>]], log[:<cutoff>[:<amplitude>]],
    bump:<radius>[:<height>].
    """
    if isinstance(node, str):
        parts = node.split(":")
        kind, args = parts[0], parts[1:]
        node = {"kind": kind}
        try:
            if kind == "constant":
                node["value"] = float(args[0])
            elif kind == "power":
                node["exponent"] = float(args[0])
                if len(args) > 1:
                    node["cutoff"] = float(args[1])
                if len(args) > 2:
                    node["amplitude"] = float(args[2])
            elif kind == "log":
                if args:
                    node["cutoff"] = float(args[0])
                if len(args) > 1:
                    node["amplitude"] = float(args[1])
            elif kind == "bump":
                node["radius"] = float(args[0])
                if len(args) > 1:
                    node["height"] = float(args[1])
            else:
                raise ConfigError(f"unknown potential kind {kind!r}")
        except (ValueError, IndexError) as e:
            raise ConfigError(f"bad potential descriptor: {e}") from None
    if not isinstance(node, dict) or "kind" not in node:
        raise ConfigError("potential needs a kind")
    kind = node["kind"]
    if kind == "constant":
        return Constant(float(node.get("value", 1.0)))
    if kind == "power":
        cutoff = node.get("cutoff")
        return PowerSingularity(
            _center(node, model),
            float(node.get("exponent", 1.0)),
            None if cutoff is None else float(cutoff),
            float(node.get("amplitude", 1.0)),
        )
    if kind == "log":
        return LogSingularity(
            _center(node, model),
            float(node.get("cutoff", 1.0)),
            float(node.get("amplitude", 1.0)),
        )
    if kind == "bump":
        return Bump(
            _center(node, model),
            float(node.get("radius", 1.0)),
            float(node.get("height", 1.0)),
        )
    if kind == "truncated":
        inner = build_potential(node.get("inner"), model)
        region = build_region(node.get("region"), model)
        if region is None:
            raise ConfigError("truncated potential needs a region")
        return Truncated(inner, region)
    if kind == "sum":
        parts = [build_potential(p, model) for p in _as_list(node.get("part"))]
        if not parts:
            raise ConfigError("sum potential needs part sections")
        return Sum(tuple(parts))
    raise ConfigError(f"unknown potential kind {kind!r}")


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class Scenario:
    """One resolved unit of CLI work."""

    name: str
    op: str
    model: Model
    potential: object | None
    region: object | None
    params: dict = field(default_factory=dict)

    def param(self, key, default=None):
        return self.params.get(key, default)

    def times(self, default=(0.5,)):
        ts = _as_list(self.params.get("t"))
        return tuple(float(t) for t in ts) or tuple(default)


_STOCHASTIC_OPS = {"fk", "mc-norm", "khasminskii", "exit-time", "localize-mc"}
_KNOWN_OPS = {
    "norm", "classify", "localize", "fk", "mc-norm", "khasminskii",
    "subadditivity", "resolvent", "holder", "l1-lower", "comparability",
    "mollification", "doubling", "exit-time", "localize-mc",
}


def build_scenario(tree: dict, defaults: dict | None = None) -> Scenario:
    """Scenario from a parsed config tree (plus CLI-flag defaults)."""
    merged = dict(defaults or {})
    merged.update(tree)
    op = merged.get("op")
    if op not in _KNOWN_OPS:
        raise ConfigError(f"op must be one of {sorted(_KNOWN_OPS)}, got {op!r}")
    if "model" not in merged:
        raise ConfigError("scenario needs a model")
    model = build_model(merged["model"])
    potential = None
    if "potential" in merged:
        pots = [build_potential(p, model) for p in _as_list(merged["potential"])]
        potential = pots[0] if len(pots) == 1 else Sum(tuple(pots))
    region = build_region(merged.get("region"), model)
    params = {
        k: v
        for k, v in merged.items()
        if k not in ("op", "model", "potential", "region", "name")
    }
    if op in _STOCHASTIC_OPS and "seed" not in params:
        raise ConfigError(f"op {op!r} is stochastic and needs an explicit seed")
    return Scenario(str(merged.get("name", op)), op, model, potential, region, params)


def scenarios_from_text(text: str, defaults: dict | None = None) -> list[Scenario]:
    """All scenarios in a config file: repeated 'scenario' sections, or the
    whole tree as a single anonymous scenario."""
    tree = parse_config(text)
    merged_defaults = dict(defaults or {})
    file_defaults = tree.get("defaults")
    if isinstance(file_defaults, dict):
        merged_defaults.update(file_defaults)
    if "scenario" in tree:
        return [build_scenario(s, merged_defaults) for s in _as_list(tree["scenario"])]
    tree = {k: v for k, v in tree.items() if k != "defaults"}
    return [build_scenario(tree, merged_defaults)]
