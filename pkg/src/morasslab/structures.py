"""The layered relational structure over a fragment's persistent family.

The base set has an ordinal part (the fragment's universe, carrying only
its order) and, for each finite subset u of the universe, a layer: finite
sets of catalog functions with domain u.  Layers carry the affine
structure of symmetric difference through bit relations on singleton
differences, and are linked by restriction homomorphisms.  Two expansions
of the same structure by a constant, one naming the empty set of the base
layer and one naming the singleton of the strategy function, are the
game's protagonists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .morass import MorassFragment, predecessor_vector
from .ordinal import OrdinalCNF, parse_ordinal, render_ordinal
from .persistency import PFunc, fiber_bound, morass_strategy


class StructureError(ValueError):
    pass


class LayerTooLargeError(StructureError):
    pass


class ValueCapError(StructureError):
    """A needed function exceeds the structure's value cap."""


class CatalogClosureError(StructureError):
    """A restriction of a catalog member is missing below: the catalogs are inconsistent."""


@dataclass(frozen=True)
class OrdElement:
    value: OrdinalCNF

    def __repr__(self) -> str:
        return f"Ord({render_ordinal(self.value)})"


@dataclass(frozen=True)
class SetElement:
    u: tuple[OrdinalCNF, ...]
    members: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        keys = [x.terms for x in self.u]
        if sorted(set(keys)) != keys:
            raise StructureError("layer domains must be sorted and duplicate-free")
        if any(i < 0 for i in self.members):
            raise StructureError("catalog indices are naturals")

    def __repr__(self) -> str:
        u = ",".join(render_ordinal(x) for x in self.u)
        return f"Set[{u}]{sorted(self.members)}"


CElement = OrdElement | SetElement


def element_sort_key(e: CElement):
    if isinstance(e, OrdElement):
        return (0, e.value.terms, ())
    return (1, tuple(x.terms for x in e.u), tuple(sorted(e.members)))


class Layer:
    """Catalog of the functions with a fixed finite domain, canonically indexed."""

    def __init__(self, u: tuple[OrdinalCNF, ...], catalog: tuple[PFunc, ...]):
        self.u = u
        self.catalog = catalog
        self.bits = (len(catalog) - 1).bit_length() if len(catalog) > 1 else 0
        self._index = {f: i for i, f in enumerate(catalog)}

    def __len__(self) -> int:
        return len(self.catalog)

    def index_of(self, f: PFunc) -> int | None:
        return self._index.get(f)

    def func_at(self, i: int) -> PFunc:
        return self.catalog[i]

    def bitstring(self, i: int) -> str:
        return "".join("1" if (i >> n) & 1 else "0" for n in range(self.bits))

    def index_of_bitstring(self, s: str) -> int:
        if len(s) != self.bits:
            raise StructureError(f"bitstring length {len(s)} != layer bits {self.bits}")
        return sum(1 << n for n, ch in enumerate(s) if ch == "1")


def normalize_u(u: Iterable[OrdinalCNF]) -> tuple[OrdinalCNF, ...]:
    return tuple(sorted(set(u), key=lambda x: x.terms))


class LayerCache:
    """Memoized layers, restriction indices and projections, shareable between expansions."""

    def __init__(self):
        self.layers: dict[tuple, Layer] = {}
        self.restrictions: dict[tuple, int] = {}
        self.projections: dict[tuple, frozenset[int]] = {}


class CStructure:
    """One of the two expansions: shared fragment, value cap, and a constant.

    Layers are materialized lazily and memoized in a cache that both
    expansions share, so element identity agrees across them.
    """

    def __init__(
        self,
        frag: MorassFragment,
        value_cap: int,
        constant: SetElement,
        cache: LayerCache | None = None,
        max_layer_candidates: int = 60000,
    ):
        if isinstance(constant, OrdElement):
            raise StructureError("the constant must be a layer element")
        self.frag = frag
        self.value_cap = value_cap
        self.constant = constant
        self.max_layer_candidates = max_layer_candidates
        self._cache = cache if cache is not None else LayerCache()

    def layer_cache(self) -> LayerCache:
        return self._cache

    def empty(self, u: Iterable[OrdinalCNF]) -> SetElement:
        return SetElement(normalize_u(u))

    def singleton(self, u: Iterable[OrdinalCNF], f: PFunc) -> SetElement:
        uu = normalize_u(u)
        layer = enumerate_layer(self, uu)
        idx = layer.index_of(f)
        if idx is None:
            raise StructureError(f"{f} is not in the layer catalog over {uu}")
        return SetElement(uu, frozenset((idx,)))


def enumerate_layer(struct: CStructure, u: Iterable[OrdinalCNF]) -> Layer:
    """Materialize the catalog over u: all family members with that exact domain.

    Functions are generated in lexicographic (element order, value) order by
    a DFS that prunes value-propagation conflicts and unbounded fibers as
    soon as they appear, so the indexing is deterministic across runs.
    """
    if isinstance(u, tuple):
        cached = struct._cache.layers.get(u)
        if cached is not None:
            return cached
    uu = normalize_u(u)
    cached = struct._cache.layers.get(uu)
    if cached is not None:
        return cached
    frag = struct.frag
    cap = struct.value_cap
    for x in uu:
        frag.check_element(x)
    if (cap + 1) ** len(uu) > struct.max_layer_candidates:
        raise LayerTooLargeError(
            f"layer over {len(uu)} elements with values <= {cap} exceeds the configured limit"
        )
    es = uu
    n = len(es)
    height = frag.height
    vecs = [predecessor_vector(frag, x) for x in es]

    dominating: dict[tuple[int, int], frozenset[int]] = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            below = not any(a > b for a, b in zip(vecs[i], vecs[j]))
            if not below:
                dominating[(i, j)] = frozenset()
                continue
            eq_levels = {b for b in range(height + 1) if vecs[i][b] == vecs[j][b]}
            dominating[(i, j)] = frozenset(
                a for a in range(cap + 1) if min(a, height) in eq_levels
            )

    bound_ok_cache: dict[frozenset, bool] = {}

    def fiber_ok(indices: tuple[int, ...]) -> bool:
        key = frozenset(es[i] for i in indices)
        hit = bound_ok_cache.get(key)
        if hit is None:
            hit = fiber_bound(frag, key) is not None
            bound_ok_cache[key] = hit
        return hit

    catalog: list[PFunc] = []
    values = [0] * n

    def rec(k: int) -> None:
        if k == n:
            catalog.append(PFunc.from_pairs(zip(es, values)))
            return
        for v in range(cap + 1):
            ok = True
            for j in range(k):
                vj = values[j]
                if vj in dominating[(k, j)] and v != vj:
                    ok = False
                    break
                if v in dominating[(j, k)] and vj != v:
                    ok = False
                    break
            if not ok:
                continue
            values[k] = v
            fiber = tuple(i for i in range(k + 1) if values[i] == v)
            if len(fiber) > 1 and not fiber_ok(fiber):
                continue
            rec(k + 1)

    rec(0)
    layer = Layer(uu, tuple(catalog))
    struct._cache.layers[uu] = layer
    return layer


# ---------------------------------------------------------------------------
# Relations


def rel_le(struct: CStructure, a: CElement, b: CElement) -> bool:
    """The order relation; holds only between ordinal-part elements."""
    return isinstance(a, OrdElement) and isinstance(b, OrdElement) and a.value <= b.value


def rel_e(struct: CStructure, a: CElement, b: CElement) -> bool:
    """Membership link: an ordinal is E-related to the layer elements indexed by it."""
    return (
        isinstance(a, OrdElement)
        and isinstance(b, SetElement)
        and a.value in b.u
    )


def _singleton_difference(a: SetElement, b: SetElement) -> int | None:
    d = a.members ^ b.members
    if len(d) == 1:
        return next(iter(d))
    return None


def rel_r(struct: CStructure, n: int, i: int, a: CElement, b: CElement) -> bool:
    """Bit relation: same layer, singleton symmetric difference, bit n equal to i.

    Bit n of a catalog index x is its n-th binary digit (least significant
    first); for n at or beyond the layer's bit width no relation holds.
    """
    if i not in (0, 1) or n < 0:
        raise StructureError(f"bad relation R_{n},{i}")
    if not (isinstance(a, SetElement) and isinstance(b, SetElement)):
        return False
    if a.u != b.u:
        return False
    x = _singleton_difference(a, b)
    if x is None:
        return False
    layer = enumerate_layer(struct, a.u)
    if n >= layer.bits:
        return False
    return (x >> n) & 1 == i


def rel_s(struct: CStructure, a: CElement, b: CElement) -> bool:
    """Projection link: a is the restriction image of b one layer down."""
    if not (isinstance(a, SetElement) and isinstance(b, SetElement)):
        return False
    if not set(a.u) <= set(b.u):
        return False
    return project(struct, a.u, b.u, b) == a


def rel(struct: CStructure, name: str, args: tuple) -> bool:
    """Generic dispatcher; R relations are addressed as "R_<n>_<i>"."""
    if name == "le":
        return rel_le(struct, *args)
    if name == "E":
        return rel_e(struct, *args)
    if name == "S":
        return rel_s(struct, *args)
    if name.startswith("R_"):
        _, n, i = name.split("_")
        return rel_r(struct, int(n), int(i), *args)
    raise StructureError(f"unknown relation {name!r}")


def project(
    struct: CStructure,
    u: Iterable[OrdinalCNF],
    v: Iterable[OrdinalCNF],
    b: SetElement,
) -> SetElement:
    """Restriction homomorphism from layer v to layer u <= v.

    Members restrict one by one and accumulate by symmetric difference, so
    members with equal restrictions cancel; the empty result is the lower
    layer's empty token.
    """
    uu = u if isinstance(u, tuple) else normalize_u(u)
    vv = v if isinstance(v, tuple) else normalize_u(v)
    if b.u != vv:
        raise StructureError("element does not belong to the upper layer")
    pkey = (uu, vv, b.members)
    hit = struct._cache.projections.get(pkey)
    if hit is not None:
        return SetElement(uu, hit)
    if not set(uu) <= set(vv):
        raise StructureError("projection requires u to be a subset of v")
    restrictions = struct._cache.restrictions
    acc = 0
    for idx in b.members:
        key = (uu, vv, idx)
        j = restrictions.get(key)
        if j is None:
            layer_v = enumerate_layer(struct, vv)
            layer_u = enumerate_layer(struct, uu)
            j = layer_u.index_of(layer_v.func_at(idx).restrict(uu))
            if j is None:
                raise CatalogClosureError(
                    f"restriction of catalog member {idx} missing from the lower catalog"
                )
            restrictions[key] = j
        acc ^= 1 << j
    members = frozenset(n for n in range(acc.bit_length()) if (acc >> n) & 1)
    struct._cache.projections[pkey] = members
    return SetElement(uu, members)


def shift_map(struct: CStructure, u: Iterable[OrdinalCNF], a: SetElement):
    """The involution b -> b symmetric-difference a within one layer."""
    uu = normalize_u(u)
    if not isinstance(a, SetElement) or a.u != uu:
        raise StructureError("shift element must belong to the layer")

    def shifted(b: SetElement) -> SetElement:
        if not isinstance(b, SetElement) or b.u != uu:
            raise StructureError("cross-layer application of a shift")
        return SetElement(uu, b.members ^ a.members)

    return shifted


def make_ab(
    frag: MorassFragment,
    base_u: Iterable[OrdinalCNF],
    value_cap: int | None = None,
    max_layer_candidates: int = 60000,
) -> tuple[CStructure, CStructure, PFunc]:
    """Build the two constant expansions over a common base layer.

    The defender strategy is run against the increasing enumeration of the
    base domain; the resulting function interprets the constant of the
    second structure as a singleton, the first names the empty token.
    """
    uu = normalize_u(base_u)
    player = morass_strategy(frag)
    for x in uu:
        player.respond(x)
    f_star = PFunc.from_pairs(player.history)
    cap = frag.height + len(uu) + 2 if value_cap is None else value_cap
    if f_star.max_value() > cap:
        raise ValueCapError(
            f"value cap {cap} too small: the base run needs {f_star.max_value()}"
        )
    shared = LayerCache()
    a_struct = CStructure(
        frag, cap, SetElement(uu), shared, max_layer_candidates=max_layer_candidates
    )
    layer = enumerate_layer(a_struct, uu)
    idx = layer.index_of(f_star)
    if idx is None:
        raise ValueCapError("the base-run function is missing from its own layer catalog")
    b_struct = CStructure(
        frag,
        cap,
        SetElement(uu, frozenset((idx,))),
        shared,
        max_layer_candidates=max_layer_candidates,
    )
    return a_struct, b_struct, f_star


# ---------------------------------------------------------------------------
# Partial isomorphisms


def _r_signature(struct: CStructure, a: CElement, b: CElement) -> frozenset | None:
    """The set of bit relations holding between a and b, None when there are none."""
    if not (isinstance(a, SetElement) and isinstance(b, SetElement)) or a.u != b.u:
        return None
    x = _singleton_difference(a, b)
    if x is None:
        return None
    layer = enumerate_layer(struct, a.u)
    if layer.bits == 0:
        return None
    return frozenset((n, (x >> n) & 1) for n in range(layer.bits))


def _validate_element(struct: CStructure, e: CElement) -> str | None:
    if isinstance(e, OrdElement):
        if not e.value < struct.frag.top_theta:
            return f"{e!r} outside the ordinal part"
        return None
    layer = enumerate_layer(struct, e.u)
    if any(i < 0 or i >= len(layer) for i in e.members):
        return f"{e!r} has members outside the layer catalog"
    return None


def check_partial_iso_report(
    psi: Mapping[CElement, CElement], a_struct: CStructure, b_struct: CStructure
) -> list[str]:
    """All violations of psi being a partial isomorphism between the expansions."""
    problems: list[str] = []
    items = list(psi.items())
    images = [y for _, y in items]
    if len(set(images)) != len(images):
        problems.append("map is not injective")
    for x, y in items:
        err = _validate_element(a_struct, x) or _validate_element(b_struct, y)
        if err:
            problems.append(err)
    if problems:
        return problems
    c_a, c_b = a_struct.constant, b_struct.constant
    for x, y in items:
        if (x == c_a) != (y == c_b):
            problems.append(f"constant not respected at {x!r} -> {y!r}")
    for x1, y1 in items:
        for x2, y2 in items:
            if rel_le(a_struct, x1, x2) != rel_le(b_struct, y1, y2):
                problems.append(f"order relation broken on ({x1!r}, {x2!r})")
            if rel_e(a_struct, x1, x2) != rel_e(b_struct, y1, y2):
                problems.append(f"membership link broken on ({x1!r}, {x2!r})")
            if rel_s(a_struct, x1, x2) != rel_s(b_struct, y1, y2):
                problems.append(f"projection link broken on ({x1!r}, {x2!r})")
            if _r_signature(a_struct, x1, x2) != _r_signature(b_struct, y1, y2):
                problems.append(f"bit relations broken on ({x1!r}, {x2!r})")
    return problems


def check_partial_iso(
    psi: Mapping[CElement, CElement], a_struct: CStructure, b_struct: CStructure
) -> bool:
    return not check_partial_iso_report(psi, a_struct, b_struct)


@dataclass(frozen=True)
class IsoClassification:
    identity_on_ord: bool
    layer_shifts: tuple[tuple[tuple[OrdinalCNF, ...], frozenset | None], ...]
    is_shift_family: bool
    coherent: bool
    top_u: tuple[OrdinalCNF, ...] | None
    a_top: frozenset | None
    n_psi: int | None
    notes: tuple[str, ...] = ()

    def shift_of(self, u: tuple[OrdinalCNF, ...]) -> frozenset | None:
        for uu, shift in self.layer_shifts:
            if uu == u:
                return shift
        return None


def classify_partial_iso(
    psi: Mapping[CElement, CElement], a_struct: CStructure, b_struct: CStructure
) -> IsoClassification:
    """Describe the shape of a partial isomorphism.

    Reports whether the ordinal part is fixed pointwise; per touched layer,
    whether the restriction is a shift and by which element; whether the
    shift family is coherent under projections; and the size of the top
    coherent element when one exists (directly, or by gluing singleton
    shifts over the union of the touched layers).
    """
    notes: list[str] = []
    identity_on_ord = all(
        psi[x] == x for x in psi if isinstance(x, OrdElement)
    )
    by_layer: dict[tuple[OrdinalCNF, ...], list[tuple[SetElement, CElement]]] = {}
    for x, y in psi.items():
        if isinstance(x, SetElement):
            by_layer.setdefault(x.u, []).append((x, y))

    shifts: list[tuple[tuple[OrdinalCNF, ...], frozenset | None]] = []
    is_shift_family = True
    for u, pairs in sorted(by_layer.items(), key=lambda kv: tuple(x.terms for x in kv[0])):
        witnesses = set()
        for x, y in pairs:
            if not isinstance(y, SetElement) or y.u != u:
                witnesses = None
                break
            witnesses.add(x.members ^ y.members)
        if witnesses is None or len(witnesses) != 1:
            shifts.append((u, None))
            is_shift_family = False
        else:
            shifts.append((u, frozenset(next(iter(witnesses)))))

    coherent = is_shift_family
    if is_shift_family:
        for u, a_u in shifts:
            for v, a_v in shifts:
                if u == v or not set(u) <= set(v):
                    continue
                image = project(a_struct, u, v, SetElement(v, a_v))
                if image.members != a_u:
                    coherent = False
                    notes.append("projection incompatibility between touched layers")

    top_u = None
    a_top = None
    n_psi = None
    if is_shift_family and coherent and shifts:
        maximal = [
            (u, s)
            for u, s in shifts
            if not any(set(u) < set(v) for v, _ in shifts)
        ]
        if len(maximal) == 1:
            top_u, a_top = maximal[0]
            n_psi = len(a_top)
        elif all(len(s) == 0 for _, s in shifts):
            top_u = normalize_u(x for u, _ in shifts for x in u)
            a_top = frozenset()
            n_psi = 0
        elif all(len(s) == 1 for _, s in shifts):
            glued: dict[OrdinalCNF, int] = {}
            consistent = True
            for u, s in shifts:
                layer = enumerate_layer(a_struct, u)
                f = layer.func_at(next(iter(s)))
                for k, v in f.entries:
                    if glued.get(k, v) != v:
                        consistent = False
                glued.update(f.entries)
            if consistent:
                union_u = normalize_u(glued.keys())
                try:
                    layer_top = enumerate_layer(a_struct, union_u)
                except LayerTooLargeError:
                    notes.append("top layer too large to materialize; size left open")
                else:
                    idx = layer_top.index_of(PFunc.from_pairs(glued.items()))
                    if idx is not None:
                        top_u = union_u
                        a_top = frozenset((idx,))
                        n_psi = 1
                    else:
                        notes.append("glued singleton shifts leave the family")
            else:
                notes.append("singleton shifts do not glue to one function")
        else:
            notes.append("touched layers have no unique maximum")

    return IsoClassification(
        identity_on_ord=identity_on_ord,
        layer_shifts=tuple(shifts),
        is_shift_family=is_shift_family,
        coherent=coherent,
        top_u=top_u,
        a_top=a_top,
        n_psi=n_psi,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# JSON encoding


def element_to_json(struct: CStructure, e: CElement):
    if isinstance(e, OrdElement):
        return {"ord": render_ordinal(e.value)}
    layer = enumerate_layer(struct, e.u)
    return {
        "layer": [render_ordinal(x) for x in e.u],
        "members": sorted(layer.bitstring(i) for i in e.members),
    }


def element_from_json(struct: CStructure, obj) -> CElement:
    if "ord" in obj:
        return OrdElement(parse_ordinal(obj["ord"]))
    u = normalize_u(parse_ordinal(s) for s in obj["layer"])
    layer = enumerate_layer(struct, u)
    members = frozenset(layer.index_of_bitstring(s) for s in obj["members"])
    return SetElement(u, members)


def layer_to_json(struct: CStructure, u: Iterable[OrdinalCNF]) -> dict:
    layer = enumerate_layer(struct, u)
    return {
        "u": [render_ordinal(x) for x in layer.u],
        "value_cap": struct.value_cap,
        "size": len(layer),
        "bits": layer.bits,
        "catalog": [
            {
                "index": i,
                "bits": layer.bitstring(i),
                "pairs": [[render_ordinal(k), v] for k, v in f.entries],
            }
            for i, f in enumerate(layer.catalog)
        ],
    }
