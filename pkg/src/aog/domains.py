"""Parameter domains.

A domain supplies the interpretation of node parameters: a registry of
named relations (predicates over child parameters) and functions (child
parameters to parent parameter), a JSON codec for parameter values, and
enough structure to drive sampling.  Grammars only store string keys plus
config dicts, so a grammar file is meaningful on its own and the engine
stays agnostic about what parameters actually are.

Built-in domains: string spans, integer grid points, integer intervals,
the trivial null domain, and a tuple domain that wraps any base domain
(used by the normalizer to thread flattened child parameters through
binarized rules).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable

from .errors import ConfigError, DomainError

Relation = Callable[..., bool]
Function = Callable[..., Any]
# factory(config, arity) -> callable; arity is the rule's child count
RelationFactory = Callable[[dict, int], Relation]
FunctionFactory = Callable[[dict, int], Function]


@dataclass(frozen=True)
class RelationRef:
    """Reference to a domain relation: registry key plus config."""

    key: str
    config: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FunctionRef:
    """Reference to a domain function: registry key plus config."""

    key: str
    config: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ParamTuple:
    """Flat sequence of parameter values, used for partially combined children."""

    items: tuple

    def __len__(self) -> int:
        return len(self.items)


def param_order_key(value: Any):
    """Total order over parameter values of mixed shape, for deterministic ties."""
    if value is None:
        return (0,)
    if isinstance(value, bool):
        raise DomainError("bool is not a parameter value")
    if isinstance(value, int):
        return (1, value)
    if isinstance(value, tuple):
        return (2, len(value), tuple(param_order_key(v) for v in value))
    if isinstance(value, ParamTuple):
        return (3, len(value), tuple(param_order_key(v) for v in value.items))
    raise DomainError(f"unorderable parameter value: {value!r}")


@dataclass(eq=False)
class DomainBinding:
    """A named domain: relation/function registries, codec, sampling hooks.

    strategy is either "leaf_order" (parameters are pinned at the leaves and
    folded upward, as with string spans) or "top_down" (a root parameter is
    split into child parameters while descending, as with grid points).

    Bindings compare by (name, config): domain_from_config rebuilds the
    same callables from those two fields, so identically configured
    bindings are interchangeable even when their function objects differ.
    """

    name: str
    config: dict
    relations: dict[str, RelationFactory]
    functions: dict[str, FunctionFactory]
    encode_param: Callable[[Any], Any]
    decode_param: Callable[[Any], Any]
    strategy: str
    # leaf_order: leaf index -> parameter
    leaf_param: Callable[[int], Any] | None = None
    # top_down: default parameter for the sample root
    root_default: Callable[[], Any] | None = None
    # top_down: (relation, function, parent param, arity) -> child params
    realize_children: Callable[[RelationRef, FunctionRef, Any, int], tuple] | None = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DomainBinding):
            return NotImplemented
        return self.name == other.name and self.config == other.config

    def relation(self, ref: RelationRef, arity: int) -> Relation:
        factory = self.relations.get(ref.key)
        if factory is None:
            raise DomainError(f"domain {self.name!r} has no relation {ref.key!r}")
        return factory(dict(ref.config), arity)

    def function(self, ref: FunctionRef, arity: int) -> Function:
        factory = self.functions.get(ref.key)
        if factory is None:
            raise DomainError(f"domain {self.name!r} has no function {ref.key!r}")
        return factory(dict(ref.config), arity)


def _no_config(config: dict, where: str) -> None:
    if config:
        raise ConfigError(f"{where} takes no config, got {sorted(config)}")


def _check_pair(value: Any, what: str) -> tuple[int, int]:
    if (
        not isinstance(value, tuple)
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise DomainError(f"{what} must be a pair of ints, got {value!r}")
    return value


# ---------------------------------------------------------------- string spans


def _span_decode(raw: Any) -> tuple[int, int]:
    if not isinstance(raw, list) or len(raw) != 2:
        raise DomainError(f"span must be encoded as [start, end], got {raw!r}")
    start, end = raw
    if not isinstance(start, int) or not isinstance(end, int) or start >= end:
        raise DomainError(f"span needs ints start < end, got {raw!r}")
    return (start, end)


def string_span_domain() -> DomainBinding:
    """Half-open index spans into a token string.

    Relation "adjacent" holds when consecutive child spans abut; function
    "concat" returns the covering span.  Leaf i is pinned to span (i, i+1).
    """

    def adjacent(config: dict, arity: int) -> Relation:
        _no_config(config, "adjacent")

        def pred(*spans) -> bool:
            for left, right in zip(spans, spans[1:]):
                if _check_pair(left, "span")[1] != _check_pair(right, "span")[0]:
                    return False
            return True

        return pred

    def concat(config: dict, arity: int) -> Function:
        _no_config(config, "concat")

        def fn(*spans):
            return (spans[0][0], spans[-1][1])

        return fn

    return DomainBinding(
        name="string_span",
        config={},
        relations={"adjacent": adjacent},
        functions={"concat": concat},
        encode_param=lambda p: list(_check_pair(p, "span")),
        decode_param=_span_decode,
        strategy="leaf_order",
        leaf_param=lambda i: (i, i + 1),
    )


# ------------------------------------------------------------------ grid points


def _point_decode(raw: Any) -> tuple[int, int]:
    if not isinstance(raw, list) or len(raw) != 2 or not all(isinstance(v, int) for v in raw):
        raise DomainError(f"grid point must be encoded as [x, y], got {raw!r}")
    return (raw[0], raw[1])


def _read_offsets(config: dict, arity: int) -> list[tuple[int, int]]:
    offsets = config.pop("offsets", None)
    _no_config(config, "offset")
    if not isinstance(offsets, list) or len(offsets) != arity - 1:
        raise ConfigError(f"offset needs {arity - 1} offsets for arity {arity}")
    out = []
    for entry in offsets:
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ConfigError(f"offset entries must be [dx, dy], got {entry!r}")
        out.append((int(entry[0]), int(entry[1])))
    return out


def grid_domain() -> DomainBinding:
    """Integer lattice points.

    Relation "offset" fixes each later child at a configured displacement
    from the first child; function "anchor" places the parent at a configured
    displacement from the first child.  Sampling is top-down from (0, 0).
    """

    def offset(config: dict, arity: int) -> Relation:
        offsets = _read_offsets(config, arity)

        def pred(*points) -> bool:
            base = _check_pair(points[0], "grid point")
            for point, (dx, dy) in zip(points[1:], offsets):
                px, py = _check_pair(point, "grid point")
                if (px - base[0], py - base[1]) != (dx, dy):
                    return False
            return True

        return pred

    def anchor(config: dict, arity: int) -> Function:
        raw = config.pop("anchor", [0, 0])
        _no_config(config, "anchor")
        if not isinstance(raw, (list, tuple)) or len(raw) != 2:
            raise ConfigError(f"anchor must be [dx, dy], got {raw!r}")
        ax, ay = int(raw[0]), int(raw[1])

        def fn(*points):
            base = points[0]
            return (base[0] + ax, base[1] + ay)

        return fn

    def realize(rel: RelationRef, fn: FunctionRef, parent: Any, arity: int):
        if rel.key != "offset" or fn.key != "anchor":
            raise DomainError(f"cannot realize children for {rel.key!r}/{fn.key!r}")
        offsets = _read_offsets(dict(rel.config), arity)
        raw = dict(fn.config).get("anchor", [0, 0])
        px, py = _check_pair(parent, "grid point")
        first = (px - int(raw[0]), py - int(raw[1]))
        return (first,) + tuple((first[0] + dx, first[1] + dy) for dx, dy in offsets)

    return DomainBinding(
        name="grid",
        config={},
        relations={"offset": offset},
        functions={"anchor": anchor},
        encode_param=lambda p: list(_check_pair(p, "grid point")),
        decode_param=_point_decode,
        strategy="top_down",
        root_default=lambda: (0, 0),
        realize_children=realize,
    )


# ------------------------------------------------------------------- intervals


def _interval_decode(raw: Any) -> tuple[int, int]:
    if not isinstance(raw, list) or len(raw) != 2:
        raise DomainError(f"interval must be encoded as [start, end], got {raw!r}")
    start, end = raw
    if not isinstance(start, int) or not isinstance(end, int) or start >= end:
        raise DomainError(f"interval needs ints start < end, got {raw!r}")
    return (start, end)


def interval_domain() -> DomainBinding:
    """Integer intervals with a few Allen-style relations.

    "meets" and "before" chain consecutive children, "equals" makes all
    children coincide, "during" (binary) nests the first child strictly
    inside the second.  Function "hull" spans from the earliest start to the
    latest end.  Top-down sampling realizes "meets" by even splitting and
    "equals" by copying; other relations have no canonical split.
    """

    def chain(test: Callable[[tuple, tuple], bool], name: str) -> RelationFactory:
        def factory(config: dict, arity: int) -> Relation:
            _no_config(config, name)

            def pred(*ivals) -> bool:
                for left, right in zip(ivals, ivals[1:]):
                    if not test(_check_pair(left, "interval"), _check_pair(right, "interval")):
                        return False
                return True

            return pred

        return factory

    def during(config: dict, arity: int) -> Relation:
        _no_config(config, "during")
        if arity != 2:
            raise ConfigError("during is binary")

        def pred(inner, outer) -> bool:
            (a, b), (c, d) = _check_pair(inner, "interval"), _check_pair(outer, "interval")
            return c < a and b < d

        return pred

    def hull(config: dict, arity: int) -> Function:
        _no_config(config, "hull")

        def fn(*ivals):
            return (min(v[0] for v in ivals), max(v[1] for v in ivals))

        return fn

    def realize(rel: RelationRef, fn: FunctionRef, parent: Any, arity: int):
        start, end = _check_pair(parent, "interval")
        if rel.key == "equals":
            return tuple((start, end) for _ in range(arity))
        if rel.key == "meets":
            width = end - start
            if width < arity:
                raise DomainError(f"interval {parent!r} too narrow for {arity} parts")
            cuts = [start + (width * i) // arity for i in range(arity + 1)]
            return tuple((cuts[i], cuts[i + 1]) for i in range(arity))
        raise DomainError(f"no canonical child split for relation {rel.key!r}")

    return DomainBinding(
        name="interval",
        config={},
        relations={
            "meets": chain(lambda l, r: l[1] == r[0], "meets"),
            "before": chain(lambda l, r: l[1] < r[0], "before"),
            "equals": chain(lambda l, r: l == r, "equals"),
            "during": during,
        },
        functions={"hull": hull},
        encode_param=lambda p: list(_check_pair(p, "interval")),
        decode_param=_interval_decode,
        strategy="top_down",
        root_default=lambda: (0, 1024),
        realize_children=realize,
    )


# ----------------------------------------------------------------- null domain


def null_domain() -> DomainBinding:
    """Degenerate domain for grammars whose parameters carry no information."""

    def always(config: dict, arity: int) -> Relation:
        _no_config(config, "true")
        return lambda *params: True

    def null_fn(config: dict, arity: int) -> Function:
        _no_config(config, "null")
        return lambda *params: None

    def decode(raw: Any):
        if raw is not None:
            raise DomainError(f"null domain parameter must be null, got {raw!r}")
        return None

    return DomainBinding(
        name="null",
        config={},
        relations={"true": always},
        functions={"null": null_fn},
        encode_param=lambda p: None,
        decode_param=decode,
        strategy="top_down",
        root_default=lambda: None,
        realize_children=lambda rel, fn, parent, arity: tuple(None for _ in range(arity)),
    )


# ---------------------------------------------------------------- tuple domain


def tuple_domain(base: DomainBinding) -> DomainBinding:
    """Wrap a base domain so rules can pass flat tuples of child parameters.

    Adds "pack" (children -> tuple), "extend" (tuple + one more value),
    "project" (tuple component), the trivially true relation, and
    "apply_packed", which unpacks a tuple argument and applies a base
    relation or function of the original arity.  Base registry entries stay
    available, so a wrapped grammar keeps resolving untouched rules.
    """

    def always(config: dict, arity: int) -> Relation:
        _no_config(config, "true")
        return lambda *params: True

    def pack(config: dict, arity: int) -> Function:
        _no_config(config, "pack")
        return lambda *params: ParamTuple(tuple(params))

    def extend(config: dict, arity: int) -> Function:
        _no_config(config, "extend")

        def fn(packed, last):
            if not isinstance(packed, ParamTuple):
                raise DomainError(f"extend needs a packed first argument, got {packed!r}")
            return ParamTuple(packed.items + (last,))

        return fn

    def project(config: dict, arity: int) -> Function:
        index = config.pop("index", None)
        _no_config(config, "project")
        if not isinstance(index, int) or index < 0:
            raise ConfigError(f"project needs a non-negative index, got {index!r}")

        def fn(packed):
            if not isinstance(packed, ParamTuple) or index >= len(packed):
                raise DomainError(f"cannot project component {index} of {packed!r}")
            return packed.items[index]

        return fn

    def _read_applied(config: dict) -> tuple[str, dict, int]:
        key = config.pop("key", None)
        inner = config.pop("config", {})
        base_arity = config.pop("arity", None)
        _no_config(config, "apply_packed")
        if not isinstance(key, str) or not isinstance(base_arity, int) or base_arity < 2:
            raise ConfigError("apply_packed needs a base key and an arity of at least 2")
        return key, inner, base_arity

    def _unpack(packed, last, base_arity: int) -> tuple:
        if not isinstance(packed, ParamTuple):
            raise DomainError(f"apply_packed needs a packed first argument, got {packed!r}")
        flat = packed.items + (last,)
        if len(flat) != base_arity:
            raise DomainError(f"packed arity {len(flat)} does not match configured {base_arity}")
        return flat

    def apply_packed_rel(config: dict, arity: int) -> Relation:
        key, inner, base_arity = _read_applied(config)
        if arity != 2:
            raise ConfigError("apply_packed applies to a packed pair")
        target = base.relation(RelationRef(key, inner), base_arity)
        return lambda packed, last: target(*_unpack(packed, last, base_arity))

    def apply_packed_fn(config: dict, arity: int) -> Function:
        key, inner, base_arity = _read_applied(config)
        if arity != 2:
            raise ConfigError("apply_packed applies to a packed pair")
        target = base.function(FunctionRef(key, inner), base_arity)
        return lambda packed, last: target(*_unpack(packed, last, base_arity))

    def encode(value: Any):
        if isinstance(value, ParamTuple):
            return {"t": [encode(v) for v in value.items]}
        return base.encode_param(value)

    def decode(raw: Any):
        if isinstance(raw, dict):
            if set(raw) != {"t"} or not isinstance(raw["t"], list):
                raise DomainError(f"packed parameter must be {{'t': [...]}}, got {raw!r}")
            return ParamTuple(tuple(decode(v) for v in raw["t"]))
        return base.decode_param(raw)

    relations = dict(base.relations)
    relations.update({"true": always, "apply_packed": apply_packed_rel})
    functions = dict(base.functions)
    functions.update(
        {"pack": pack, "extend": extend, "project": project, "apply_packed": apply_packed_fn}
    )
    return DomainBinding(
        name="tuple",
        config={"base": base.name, "base_config": base.config},
        relations=relations,
        functions=functions,
        encode_param=encode,
        decode_param=decode,
        strategy=base.strategy,
        leaf_param=base.leaf_param,
        root_default=base.root_default,
        realize_children=base.realize_children,
    )


_BUILDERS: dict[str, Callable[..., DomainBinding]] = {
    "string_span": string_span_domain,
    "grid": grid_domain,
    "interval": interval_domain,
    "null": null_domain,
}


def domain_from_config(name: str, config: dict | None = None) -> DomainBinding:
    """Rebuild a domain binding from its serialized {name, config} form."""
    config = dict(config or {})
    if name == "tuple":
        base_name = config.pop("base", None)
        base_config = config.pop("base_config", {})
        if config:
            raise ConfigError(f"unknown tuple domain config keys: {sorted(config)}")
        if base_name is None:
            raise ConfigError("tuple domain config needs a base domain name")
        return tuple_domain(domain_from_config(base_name, base_config))
    builder = _BUILDERS.get(name)
    if builder is None:
        raise ConfigError(f"unknown domain {name!r}")
    if config:
        raise ConfigError(f"domain {name!r} takes no config, got {sorted(config)}")
    return builder()
