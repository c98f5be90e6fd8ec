"""Declarative scenario files.

A scenario is a YAML document of named blocks that refer to each other by id.
Scalars that feed exact computations must be integers or rational strings such
as ``"1/24"``; floats are rejected there.  Every load error carries the line and
column of the offending node.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from .errors import ForgeError, ScenarioError
from .functionals import LocalFunctional, TestFunction, density_field, free_lagrangian, parse_functional
from .lattice_spacetime import CausalOrder, Lattice
from .metric_interpolation import ETA
from .renormalization_group import (NormalOrderingKernel, alpha_K, compose, identity, invert, mu_w,
                                    shift_element, with_interaction)
from .symmetry_group import (SymmetryTransformation, affine_at, block_translation, cyclic_shift,
                             field_sign_flip, spatial_reflection, transposition)

TOP_LEVEL = ("seed", "order", "depth", "spacetime", "lagrangians", "regions", "functionals",
             "interactions", "symmetries", "rg_elements", "cocycles", "noether", "metrics", "suites")


class LoadError(ScenarioError):
    """Scenario error with a source position."""

    def __init__(self, message: str, mark=None, block: str | None = None):
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark is not None else ""
        prefix = f"[{block}] " if block else ""
        super().__init__(f"{where}{prefix}{message}")
        self.line = mark.line + 1 if mark is not None else None
        self.column = mark.column + 1 if mark is not None else None
        self.block = block


class Node(dict):
    """Mapping that remembers where it and each of its keys came from."""
    mark = None
    key_marks: dict


class Seq(list):
    mark = None


class _Loader(yaml.SafeLoader):
    pass


def _map(loader, node):
    loader.flatten_mapping(node)
    out = Node()
    out.mark = node.start_mark
    out.key_marks = {}
    for k, v in node.value:
        key = loader.construct_object(k, deep=True)
        if key in out:
            raise LoadError(f"duplicate key {key!r}", k.start_mark)
        out[key] = loader.construct_object(v, deep=True)
        out.key_marks[key] = v.start_mark
    return out


def _seq(loader, node):
    out = Seq(loader.construct_object(v, deep=True) for v in node.value)
    out.mark = node.start_mark
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _map)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _seq)


def _mark(node, key=None):
    if isinstance(node, Node) and key is not None and key in node.key_marks:
        return node.key_marks[key]
    return getattr(node, "mark", None)


# scalar helpers

def _rational(value, where, block=None) -> Fraction:
    if isinstance(value, bool) or isinstance(value, float):
        raise LoadError(f"expected an exact rational, got {value!r}", where, block)
    try:
        return Fraction(value if isinstance(value, int) else str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise LoadError(f"bad rational literal {value!r}", where, block) from exc


def _real(value, where, block=None) -> float:
    if isinstance(value, bool):
        raise LoadError(f"expected a number, got {value!r}", where, block)
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise LoadError(f"bad number {value!r}", where, block) from exc


def _site(value, lattice, where, block=None) -> tuple:
    if not isinstance(value, list) or not all(isinstance(v, int) for v in value):
        raise LoadError(f"a site is a list of integers, got {value!r}", where, block)
    site = tuple(value)
    if site not in lattice:
        raise LoadError(f"site {site} lies outside the lattice", where, block)
    return site


def _require(node, key, block):
    if not isinstance(node, dict):
        raise LoadError("expected a mapping", _mark(node), block)
    if key not in node:
        raise LoadError(f"missing field {key!r}", _mark(node), block)
    return node[key]


def _ref(table: dict, name, kind: str, node, key, block):
    if name not in table:
        raise LoadError(f"dangling {kind} reference {name!r}", _mark(node, key), block)
    return table[name]


# closed-form metric expressions

_FUNCS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "sqrt": np.sqrt, "tanh": np.tanh,
          "abs": np.abs}


def _bump(r2):
    r2 = np.asarray(r2, dtype=float)
    out = np.zeros_like(r2)
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return out


_FUNCS["bump"] = _bump
_OPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply, ast.Div: np.divide,
        ast.Pow: np.power}


class Expression:
    """Arithmetic in ``t, x, y, z`` with ``exp sin cos sqrt tanh abs bump`` and ``pi``."""

    def __init__(self, text, where=None, block=None):
        self.text = str(text)
        try:
            self.tree = ast.parse(self.text.replace("^", "**"), mode="eval").body
            self._check(self.tree)
        except (SyntaxError, ValueError) as exc:
            raise LoadError(f"bad expression {self.text!r}: {exc}", where, block) from exc

    def _check(self, node):
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            self._check(node.operand)
        elif isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if node.keywords or len(node.args) != 1:
                raise ValueError("functions take one argument")
            self._check(node.args[0])
        elif isinstance(node, ast.Name) and node.id in ("t", "x", "y", "z", "pi"):
            pass
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            pass
        else:
            raise ValueError(f"unsupported syntax {ast.dump(node)[:40]}")

    def __call__(self, points):
        env = {"t": points[:, 0], "x": points[:, 1], "y": points[:, 2], "z": points[:, 3], "pi": math.pi}
        return np.broadcast_to(np.asarray(self._eval(self.tree, env), dtype=float), (len(points),))

    def _eval(self, node, env):
        if isinstance(node, ast.BinOp):
            return _OPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](self._eval(node.args[0], env))
        if isinstance(node, ast.Name):
            return env[node.id]
        return node.value


@dataclass
class MetricSpec:
    """Closed-form ``g0, g1`` (4x4 expressions or ``minkowski``) and time differentials."""
    g0: object
    g1: object
    t0: tuple
    t1: tuple
    grid: int = 10
    half_width: float = 1.0
    lambdas: int = 11
    random: int = 0
    amplitude: float = 0.1

    def _metric(self, spec, points):
        if spec == "minkowski":
            return np.broadcast_to(ETA, (len(points), 4, 4)).copy()
        out = np.empty((len(points), 4, 4))
        for i in range(4):
            for j in range(4):
                out[:, i, j] = spec[i][j](points)
        return out

    def evaluate(self, points):
        dt0 = np.stack([e(points) for e in self.t0], axis=1)
        dt1 = np.stack([e(points) for e in self.t1], axis=1)
        return self._metric(self.g0, points), self._metric(self.g1, points), dt0, dt1


@dataclass
class NoetherSpec:
    name: str
    lagrangian: str
    cocycle: str
    h: SymmetryTransformation
    h_prime: SymmetryTransformation
    region: frozenset
    observable: LocalFunctional
    split: list


@dataclass
class Scenario:
    path: str
    seed: int
    order: int
    depth: int
    lattice: Lattice
    causal_order: CausalOrder
    lagrangians: dict
    regions: dict
    functionals: dict
    interactions: dict
    symmetries: dict
    rg_elements: dict
    rg_kinds: dict
    cocycles: dict
    noether: dict
    metrics: MetricSpec | None
    suites: dict = field(default_factory=dict)

    def lagrangian(self, name: str | None = None):
        if name is None:
            return next(iter(self.lagrangians.values()))
        return self.lagrangians[name]

    def suite_params(self, check_id: str) -> dict:
        return dict(self.suites.get(check_id) or {})


# loading

def load(path, order: int | None = None) -> Scenario:
    """Parse and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc
    return loads(text, str(path), order)


def loads(text: str, path: str = "<string>", order: int | None = None) -> Scenario:
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        raise LoadError(f"YAML parse error: {exc.problem}", exc.problem_mark) from exc
    if not isinstance(doc, Node):
        raise LoadError("a scenario is a mapping of blocks", getattr(doc, "mark", None))
    for key in doc:
        if key not in TOP_LEVEL:
            raise LoadError(f"unknown block {key!r}", _mark(doc, key))
    try:
        return _Builder(doc, path, order).build()
    except LoadError:
        raise
    except ForgeError as exc:
        raise LoadError(str(exc)) from exc


class _Builder:
    def __init__(self, doc: Node, path: str, order: int | None):
        self.doc = doc
        self.path = path
        self.order_override = order

    def _int(self, node, key, default, block):
        v = node.get(key, default) if isinstance(node, dict) else default
        if not isinstance(v, int) or isinstance(v, bool):
            raise LoadError(f"{key} must be an integer", _mark(node, key), block)
        return v

    def build(self) -> Scenario:
        doc = self.doc
        seed = self._int(doc, "seed", 0, "seed")
        order = self.order_override or self._int(doc, "order", 4, "order")
        depth = self._int(doc, "depth", 8, "depth")
        self.order = order
        self.lattice, self.slope, self.overrides = self.spacetime(_require(doc, "spacetime", None))
        self.causal = CausalOrder(self.lattice, self.slope, self.overrides or None)
        self.lagrangians = self.each("lagrangians", self.lagrangian, required=True)
        self.regions = {}
        for name, spec in self._block("regions").items():
            self.regions[name] = self.region(spec, "regions", name, where=_mark(self._block("regions"), name))
        self.functionals = self.each("functionals", self.functional)
        self.interactions = self.each("interactions", self.interaction)
        self.symmetries = self.each("symmetries", self.symmetry)
        self.rg_kinds = {}
        self.rg_elements = {}
        for name, spec in self._block("rg_elements").items():
            self.rg_elements[name] = self.rg_element(name, spec)
        self.cocycles = self.each("cocycles", self.cocycle)
        self.noether = self.each("noether", self.noether_spec)
        metrics = self.metric_spec(doc["metrics"]) if "metrics" in doc else None
        suites = self._block("suites")
        from .suites import SUITES
        for key in suites:
            if key not in SUITES:
                raise LoadError(f"unknown suite {key!r}", _mark(suites, key), "suites")
        return Scenario(self.path, seed, order, depth, self.lattice, self.causal, self.lagrangians,
                        self.regions, self.functionals, self.interactions, self.symmetries,
                        self.rg_elements, self.rg_kinds, self.cocycles, self.noether, metrics,
                        {k: v for k, v in suites.items()})

    def _block(self, key):
        node = self.doc.get(key)
        if node is None:
            return Node()
        if not isinstance(node, dict):
            raise LoadError(f"block {key!r} must map ids to definitions", _mark(self.doc, key), key)
        return node

    def each(self, key, fn, required=False):
        node = self._block(key)
        if required and not node:
            raise LoadError(f"block {key!r} needs at least one entry", _mark(self.doc, key), key)
        out = {}
        for name, spec in node.items():
            out[name] = fn(name, spec)
        return out

    # spacetime and Lagrangians

    def spacetime(self, node):
        block = "spacetime"
        T, X = self._int(node, "T", None, block), self._int(node, "X", None, block)
        dims = self._int(node, "dims", 1, block)
        try:
            lat = Lattice(T, X, dims, bool(node.get("periodic", False)))
        except ValueError as exc:
            raise LoadError(str(exc), _mark(node), block) from exc
        slope = _rational(node.get("slope", 1), _mark(node, "slope"), block)
        overrides = {}
        for item in node.get("overrides", []) or []:
            site = _site(_require(item, "site", block), lat, _mark(item, "site"), block)
            overrides[site] = _rational(_require(item, "slope", block), _mark(item, "slope"), block)
        return lat, slope, overrides

    def lagrangian(self, name, node):
        block = f"lagrangians.{name}"
        if not isinstance(node, dict):
            raise LoadError("expected a mapping", _mark(node), block)
        n_comp = self._int(node, "n_comp", 1, block)
        mass2 = _rational(node.get("mass2", 0), _mark(node, "mass2"), block)
        pot = {}
        for k, c in (node.get("potential") or {}).items():
            if not isinstance(k, int) or k < 1:
                raise LoadError(f"potential powers are positive integers, got {k!r}", _mark(node, "potential"), block)
            pot[k] = _rational(c, _mark(node.get("potential"), k), block)
        L = free_lagrangian(self.lattice, n_comp, self.slope, self.overrides or None, mass2, pot)
        if "extra" in node:
            L = L.plus(self.parse(node["extra"], _mark(node, "extra"), block))
        try:
            L.induced_order()
        except ForgeError as exc:
            raise LoadError(f"Lagrangian does not induce a causal order: {exc}", _mark(node), block) from exc
        return L

    def parse(self, text, where, block):
        if not isinstance(text, str):
            raise LoadError(f"expected a functional string, got {text!r}", where, block)
        try:
            return parse_functional(text, self.lattice)
        except (ScenarioError, ValueError) as exc:
            raise LoadError(str(exc), where, block) from exc

    def functional(self, name, text):
        return self.parse(text, _mark(self._block("functionals"), name), f"functionals.{name}")

    # regions

    def region(self, spec, block, name=None, where=None) -> frozenset:
        where = getattr(spec, "mark", None) or where
        if isinstance(spec, str):
            if spec == "all":
                return frozenset(self.lattice.sites)
            if spec in self.regions:
                return self.regions[spec]
            raise LoadError(f"dangling region reference {spec!r}", where, block)
        if isinstance(spec, list):
            return frozenset(_site(s, self.lattice, where, block) for s in spec)
        if not isinstance(spec, dict):
            raise LoadError("a region is a name, a site list, or a mapping", where, block)
        if "past_of" in spec:
            return self.causal.causal_past(self.region(spec["past_of"], block, where=_mark(spec, "past_of")))
        if "future_of" in spec:
            return self.causal.causal_future(self.region(spec["future_of"], block, where=_mark(spec, "future_of")))
        if "complement" in spec:
            return frozenset(self.lattice.sites) - self.region(spec["complement"], block, where=_mark(spec, "complement"))
        if "union" in spec:
            out = frozenset()
            for part in spec["union"]:
                out |= self.region(part, block, where=_mark(spec, "union"))
            return out
        axes = ["t", "x", "y", "z"][:self.lattice.dims + 1]
        for key in spec:
            if key not in axes:
                raise LoadError(f"unknown region key {key!r}", _mark(spec, key), block)
        ranges = []
        for i, ax in enumerate(axes):
            hi = (self.lattice.T if i == 0 else self.lattice.X) - 1
            lo_hi = spec.get(ax, [0, hi])
            if not (isinstance(lo_hi, list) and len(lo_hi) == 2 and all(isinstance(v, int) for v in lo_hi)):
                raise LoadError(f"{ax} range is [lo, hi]", _mark(spec, ax), block)
            ranges.append(lo_hi)
        return frozenset(s for s in self.lattice.sites
                         if all(r[0] <= c <= r[1] for c, r in zip(s, ranges)))

    # interactions

    def interaction(self, name, node):
        block = f"interactions.{name}"
        power = self._int(node, "power", 4, block)
        coef = _rational(node.get("coefficient", 1), _mark(node, "coefficient"), block)
        sites = self.region(_require(node, "region", block), block, where=_mark(node, "region"))
        dens = {s: coef * LocalFunctional.var(s) ** power for s in sites}
        return density_field(dens, self.lattice, name)

    # symmetries

    def symmetry(self, name, node):
        block = f"symmetries.{name}"
        lat = self.lattice
        kind = _require(node, "kind", block)
        n_comp = self._int(node, "n_comp", 1, block)
        if kind == "affine":
            site = _site(_require(node, "site", block), lat, _mark(node, "site"), block)
            m = _rational(node.get("matrix", 1), _mark(node, "matrix"), block)
            off = _rational(node.get("offset", 0), _mark(node, "offset"), block)
            if m == 0:
                raise LoadError("matrix must be invertible", _mark(node, "matrix"), block)
            return affine_at(lat, site, m, off, n_comp, name=name)
        if kind == "transposition":
            a, b = _require(node, "sites", block)
            return transposition(lat, _site(a, lat, _mark(node, "sites"), block),
                                 _site(b, lat, _mark(node, "sites"), block), n_comp, name=name)
        if kind == "cycle":
            sites = [_site(s, lat, _mark(node, "sites"), block) for s in _require(node, "sites", block)]
            return cyclic_shift(lat, sites, n_comp, name=name)
        if kind == "translation":
            t = _require(node, "t", block)
            x = _require(node, "x", block)
            return block_translation(lat, range(t[0], t[1] + 1), range(x[0], x[1] + 1), n_comp, name=name)
        if kind == "reflection":
            return spatial_reflection(lat, n_comp, name=name)
        if kind == "flip":
            region = self.region(node["region"], block, where=_mark(node, "region")) if "region" in node else None
            return field_sign_flip(lat, region, n_comp, name=name)
        if kind == "field_shift":
            region = self.region(node.get("region", "all"), block, where=_mark(node, "region"))
            amount = _rational(node.get("amount", 1), _mark(node, "amount"), block)
            return SymmetryTransformation(lat, n_comp, phi0={s: amount for s in region}, name=name)
        raise LoadError(f"unknown symmetry kind {kind!r}", _mark(node, "kind"), block)

    # renormalization group elements

    def kernel(self, node, block):
        entries = {}
        for item in _require(node, "kernel", block):
            a, b = _require(item, "sites", block)
            where = _mark(item, "sites")
            entries[(_site(a, self.lattice, where, block), _site(b, self.lattice, where, block))] = \
                _rational(_require(item, "value", block), _mark(item, "value"), block)
        return NormalOrderingKernel(entries)

    def rg_element(self, name, node):
        block = f"rg_elements.{name}"
        kind = _require(node, "kind", block)
        N = self.order
        expect = node.get("expect")
        if kind == "identity":
            Z = identity(N)
        elif kind == "alpha_K":
            Z = alpha_K(self.kernel(node, block), N, name=name)
        elif kind == "mu_w":
            w = {}
            for item in _require(node, "weights", block):
                site = _site(_require(item, "site", block), self.lattice, _mark(item, "site"), block)
                w[site] = _rational(_require(item, "value", block), _mark(item, "value"), block)
            Z = mu_w(w, N)
            expect = expect or "fails_dynamics"
        elif kind == "explicit":
            Z = shift_element(self.parse(_require(node, "shift", block), _mark(node, "shift"), block), N, name=name)
        elif kind == "compose":
            parts = [_ref(self.rg_elements, p, "rg_element", node, "of", block) for p in _require(node, "of", block)]
            Z = parts[0]
            for P in parts[1:]:
                Z = compose(Z, P, name=name)
        elif kind == "inverse":
            Z = invert(_ref(self.rg_elements, _require(node, "of", block), "rg_element", node, "of", block), name=name)
        elif kind == "transport":
            base = _ref(self.rg_elements, _require(node, "of", block), "rg_element", node, "of", block)
            W = _ref(self.functionals, _require(node, "interaction", block), "functional", node, "interaction", block)
            Z = with_interaction(base, W, TestFunction.ones(self.lattice), name=name)
        else:
            raise LoadError(f"unknown rg_element kind {kind!r}", _mark(node, "kind"), block)
        expect = expect or "valid"
        if expect not in ("valid", "fails_dynamics"):
            raise LoadError(f"expect is 'valid' or 'fails_dynamics', got {expect!r}", _mark(node, "expect"), block)
        self.rg_kinds[name] = (kind, expect)
        return Z

    # cocycles

    def cocycle(self, name, node):
        from .cocycles import coboundary, constant_cocycle, offset_charge, trivial_cocycle
        block = f"cocycles.{name}"
        kind = _require(node, "kind", block)
        L = _ref(self.lagrangians, node.get("lagrangian", next(iter(self.lagrangians))), "lagrangian",
                 node, "lagrangian", block)
        gens = {}
        for g in _require(node, "generators", block):
            gens[g] = _ref(self.symmetries, g, "symmetry", node, "generators", block)
        if len(gens) > 10:
            raise LoadError("at most ten generators", _mark(node, "generators"), block)
        rels = list(node.get("relations", []) or [])
        if kind == "trivial":
            zeta = trivial_cocycle(L, gens, self.order, rels)
        elif kind == "coboundary":
            Z = _ref(self.rg_elements, _require(node, "element", block), "rg_element", node, "element", block)
            zeta = coboundary(Z, L, gens, rels, name=name)
        elif kind == "constant":
            weights = {}
            for item in _require(node, "weights", block):
                region = self.region(_require(item, "region", block), block, where=_mark(item, "region"))
                value = _rational(_require(item, "value", block), _mark(item, "value"), block)
                for s in region:
                    weights[s] = value
            zeta = constant_cocycle(L, gens, offset_charge(weights, L.n_comp), self.order, rels, name=name)
        else:
            raise LoadError(f"unknown cocycle kind {kind!r}", _mark(node, "kind"), block)
        zeta.name = name
        try:
            zeta.check_relations()
        except ForgeError as exc:
            raise LoadError(f"inconsistent presentation: {exc}", _mark(node, "relations"), block) from exc
        return zeta

    # anomalous Noether data

    def noether_spec(self, name, node):
        block = f"noether.{name}"
        cname = _require(node, "cocycle", block)
        _ref(self.cocycles, cname, "cocycle", node, "cocycle", block)
        h = _ref(self.symmetries, _require(node, "h", block), "symmetry", node, "h", block)
        hp = _ref(self.symmetries, _require(node, "h_prime", block), "symmetry", node, "h_prime", block)
        region = self.region(_require(node, "region", block), block, where=_mark(node, "region"))
        F = _ref(self.functionals, _require(node, "observable", block), "functional", node, "observable", block)
        split = []
        for item in _require(node, "split", block):
            split.append((self.region(_require(item, "plus", block), block, where=_mark(item, "plus")),
                          self.region(item["minus"], block, where=_mark(item, "minus")) if "minus" in item else None))
        lname = self.cocycles[cname].lagrangian
        lag = next(k for k, v in self.lagrangians.items() if v is lname)
        return NoetherSpec(name, lag, cname, h, hp, region, F, split)

    # metrics

    def metric_spec(self, node):
        block = "metrics"

        def metric(key):
            spec = _require(node, key, block)
            if spec == "minkowski":
                return spec
            if not (isinstance(spec, list) and len(spec) == 4 and all(isinstance(r, list) and len(r) == 4 for r in spec)):
                raise LoadError(f"{key} is 'minkowski' or a 4x4 list of expressions", _mark(node, key), block)
            return tuple(tuple(Expression(v, _mark(node, key), block) for v in row) for row in spec)

        def differential(key):
            spec = node.get(key, ["1", "0", "0", "0"])
            if not (isinstance(spec, list) and len(spec) == 4):
                raise LoadError(f"{key} is a list of four expressions", _mark(node, key), block)
            return tuple(Expression(v, _mark(node, key), block) for v in spec)

        rnd = node.get("random") or {}
        return MetricSpec(metric("g0"), metric("g1"), differential("t0"), differential("t1"),
                          self._int(node, "grid", 10, block),
                          _real(node.get("half_width", 1), _mark(node, "half_width"), block),
                          self._int(node, "lambdas", 11, block),
                          self._int(rnd, "count", 0, block) if rnd else 0,
                          _real(rnd.get("amplitude", "1/10"), _mark(rnd, "amplitude"), block) if rnd else 0.1)
