"""Seeded random generators for the fourteen benchmark problem families.

Every generator is a pure function of ``(kind, seed, overrides)``.  Draws
come from a Philox counter-based bit generator so instances reproduce
bit-identically across platforms; the sampling order inside each builder is
part of the contract and must not be reordered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import BINARY, CONTINUOUS, EQ, GE, LE, MAXIMIZE, MINIMIZE, Instance, make_instance

KINDS = (
    "mdk_small",
    "mdk_medium",
    "mdk_large",
    "lotsizing",
    "bigbucket",
    "matching",
    "weighted_coverage",
    "portfolio_ccp",
    "fcnf",
    "set_packing",
    "set_covering",
    "independent_set",
    "cflp",
    "comb_auction",
)


@dataclass(frozen=True)
class GenSpec:
    kind: str
    seed: int
    overrides: dict = field(default_factory=dict)


def generate(spec: GenSpec) -> Instance:
    if spec.kind not in KINDS:
        raise ValueError(f"unknown kind {spec.kind!r}; known: {', '.join(KINDS)}")
    rng = np.random.Generator(np.random.Philox(key=np.uint64(spec.seed)))
    builder = _BUILDERS[spec.kind]
    inst = builder(rng, dict(spec.overrides))
    return _rename(inst, f"{spec.kind}-{spec.seed}")


def _rename(inst: Instance, name: str) -> Instance:
    return Instance(
        name=name,
        sense=inst.sense,
        objective=inst.objective,
        var_lower=inst.var_lower,
        var_upper=inst.var_upper,
        var_kind=inst.var_kind,
        rows=inst.rows,
    )


def sample_suite(kind: str, count: int, base_seed: int) -> list[Instance]:
    """Instances for seeds ``base_seed .. base_seed + count - 1``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    return [generate(GenSpec(kind, base_seed + i)) for i in range(count)]


def _take(overrides: dict, defaults: dict) -> dict:
    unknown = set(overrides) - set(defaults)
    if unknown:
        raise ValueError(f"unknown overrides: {sorted(unknown)}")
    out = dict(defaults)
    out.update(overrides)
    return out


# --- multi-dimensional knapsack ------------------------------------------------


def _mdk(rng, ov, ratio: float) -> Instance:
    dims = _take(ov, {"n": 100, "m": 50})
    n, m = dims["n"], dims["m"]
    c = rng.integers(1, 201, n)
    rows = []
    for _ in range(m):
        mask = rng.random(n) < 0.05
        vals = rng.integers(1, 201, n)
        a = vals * mask
        rhs = math.floor(ratio * float(a.sum()))
        rows.append(([(j, float(a[j])) for j in range(n) if a[j]], LE, float(rhs)))
    return make_instance("mdk", MAXIMIZE, c.astype(float), [0.0] * n, [1.0] * n, [BINARY] * n, rows)


# --- single-item capacitated lot-sizing ----------------------------------------


def _lotsizing(rng, ov) -> Instance:
    n = _take(ov, {"n": 30})["n"]
    c = rng.integers(1, 11, n)
    f = rng.integers(300, 601, n)
    h = rng.integers(1, 11, n)
    d = rng.integers(50, 101, n)
    u = rng.integers(150, 251, n)
    # variable layout: y (binary), x (production), s (inventory, n-1)
    y0, x0, s0 = 0, n, 2 * n
    nv = 3 * n - 1
    obj = np.zeros(nv)
    obj[y0 : y0 + n] = f
    obj[x0 : x0 + n] = c
    obj[s0 : s0 + n - 1] = h[: n - 1]
    lo = [0.0] * nv
    hi = [1.0] * n + [math.inf] * (2 * n - 1)
    kind = [BINARY] * n + [CONTINUOUS] * (2 * n - 1)
    rows = []
    for i in range(n):
        flow = [(x0 + i, 1.0)]
        if i > 0:
            flow.append((s0 + i - 1, 1.0))
        if i < n - 1:
            flow.append((s0 + i, -1.0))
        rows.append((flow, EQ, float(d[i])))
    tail = np.cumsum(d[::-1])[::-1]  # remaining demand from period i on
    for i in range(n):
        rows.append(([(x0 + i, 1.0), (y0 + i, -float(tail[i]))], LE, 0.0))
        rows.append(([(x0 + i, 1.0), (y0 + i, -float(u[i]))], LE, 0.0))
    return make_instance("lotsizing", MINIMIZE, obj, lo, hi, kind, rows)


# --- big-bucket (multi-product, shared capacity) lot-sizing ---------------------


def _bigbucket(rng, ov) -> Instance:
    dims = _take(ov, {"T": 10, "P": 3})
    T, P = dims["T"], dims["P"]
    ts = rng.integers(200, 501, (P, T))
    tu = rng.integers(1, 11, (P, T))
    cap = rng.integers(1500, 3001, T)
    f = rng.integers(300, 601, (P, T))
    h = rng.integers(1, 11, (P, T))
    d = rng.integers(0, 101, (P, T))
    z = rng.integers(0, 201, P)

    ns = T - 1  # free inventory variables per product; s at the horizon end is zero
    y0, x0, s0 = 0, P * T, 2 * P * T

    def yi(p, i):
        return y0 + p * T + i

    def xi(p, i):
        return x0 + p * T + i

    def si(p, i):
        return s0 + p * ns + i

    nv = 2 * P * T + P * ns
    obj = np.zeros(nv)
    lo = [0.0] * nv
    hi = [1.0] * (P * T) + [math.inf] * (nv - P * T)
    kind = [BINARY] * (P * T) + [CONTINUOUS] * (nv - P * T)
    rows = []
    for p in range(P):
        for i in range(T):
            obj[yi(p, i)] = f[p, i]
        for i in range(ns):
            obj[si(p, i)] = h[p, i]
        for i in range(T):
            flow = [(xi(p, i), 1.0)]
            rhs = float(d[p, i])
            if i == 0:
                rhs -= float(z[p])
            else:
                flow.append((si(p, i - 1), 1.0))
            if i < T - 1:
                flow.append((si(p, i), -1.0))
            rows.append((flow, EQ, rhs))
        tail = np.cumsum(d[p, ::-1])[::-1]
        for i in range(T):
            rows.append(([(xi(p, i), 1.0), (yi(p, i), -float(tail[i]))], LE, 0.0))
    for i in range(T):
        terms = []
        for p in range(P):
            terms.append((yi(p, i), float(ts[p, i])))
            terms.append((xi(p, i), float(tu[p, i])))
        rows.append((terms, LE, float(cap[i])))
    return make_instance("bigbucket", MINIMIZE, obj, lo, hi, kind, rows)


# --- geometric graphs ------------------------------------------------------------


def _geometric_edges(rng, nodes: int, edges: int) -> list[tuple[int, int]]:
    """Closest ``edges`` vertex pairs of uniform points in the unit square."""
    if edges > nodes * (nodes - 1) // 2:
        raise ValueError("more edges requested than vertex pairs available")
    pos = rng.random((nodes, 2))
    pairs = []
    for i in range(nodes):
        diff = pos[i + 1 :] - pos[i]
        d2 = (diff**2).sum(axis=1)
        pairs.extend((float(d2[k]), i, i + 1 + k) for k in range(len(d2)))
    pairs.sort()
    chosen = sorted((i, j) for _, i, j in pairs[:edges])
    return chosen


def _matching(rng, ov) -> Instance:
    dims = _take(ov, {"nodes": 300, "edges": 1000})
    nodes, edges = dims["nodes"], dims["edges"]
    edge_list = _geometric_edges(rng, nodes, edges)
    w = rng.random(edges)
    incident: dict[int, list[int]] = {}
    for e, (i, j) in enumerate(edge_list):
        incident.setdefault(i, []).append(e)
        incident.setdefault(j, []).append(e)
    rows = [
        ([(e, 1.0) for e in incident[v]], LE, 1.0)
        for v in sorted(incident)
    ]
    return make_instance(
        "matching", MAXIMIZE, w, [0.0] * edges, [1.0] * edges, [BINARY] * edges, rows
    )


# --- cardinality-constrained weighted coverage -----------------------------------


def _weighted_coverage(rng, ov) -> Instance:
    dims = _take(ov, {"universe": 1000, "sets": 200, "k": 12})
    nu, ns, k = dims["universe"], dims["sets"], dims["k"]
    member = rng.random((ns, nu)) < 0.03
    w = rng.random(nu)
    nv = ns + nu
    obj = np.zeros(nv)
    obj[ns:] = w
    lo = [0.0] * nv
    hi = [1.0] * nv
    kind = [BINARY] * ns + [CONTINUOUS] * nu
    rows = []
    for e in range(nu):
        terms = [(ns + e, 1.0)] + [(s, -1.0) for s in range(ns) if member[s, e]]
        rows.append((terms, LE, 0.0))
    rows.append(([(s, 1.0) for s in range(ns)], LE, float(k)))
    return make_instance("weighted_coverage", MAXIMIZE, obj, lo, hi, kind, rows)


# --- chance-constrained portfolio -------------------------------------------------


def _portfolio_ccp(rng, ov) -> Instance:
    dims = _take(ov, {"n": 20, "m": 100, "k": 10})
    n, m, k = dims["n"], dims["m"], dims["k"]
    a = rng.uniform(0.8, 1.5, (m, n))
    r = 1.1
    nv = n + m
    obj = np.zeros(nv)
    obj[:n] = 1.0
    lo = [0.0] * nv
    hi = [math.inf] * n + [1.0] * m
    kind = [CONTINUOUS] * n + [BINARY] * m
    rows = []
    for i in range(m):
        terms = [(j, float(a[i, j])) for j in range(n)] + [(n + i, r)]
        rows.append((terms, GE, r))
    rows.append(([(n + i, 1.0) for i in range(m)], LE, float(k)))
    return make_instance("portfolio_ccp", MINIMIZE, obj, lo, hi, kind, rows)


# --- fixed-charge multicommodity network flow --------------------------------------


def _fcnf(rng, ov) -> Instance:
    dims = _take(ov, {"nodes": 50, "edges": 150, "commodities": 3})
    nodes, edges, K = dims["nodes"], dims["edges"], dims["commodities"]
    edge_list = _geometric_edges(rng, nodes, edges)
    src, dst, dem = [], [], []
    for _ in range(K):
        s = int(rng.integers(0, nodes))
        t = int(rng.integers(0, nodes - 1))
        if t >= s:
            t += 1
        src.append(s)
        dst.append(t)
        dem.append(int(rng.integers(100, 301)))
    total = sum(dem)
    unit = rng.integers(3, 11, edges)
    fixed = rng.integers(3 * total, 8 * total + 1, edges)
    cap = rng.integers(90, 241, edges)

    E = edges
    y0, x0, z0 = 0, E, E + K * E

    def xe(p, e):
        return x0 + p * E + e

    def ze(p, e):
        return z0 + p * E + e

    nv = E + 2 * K * E
    obj = np.zeros(nv)
    obj[:E] = fixed
    for p in range(K):
        for e in range(E):
            obj[ze(p, e)] = dem[p] * float(unit[e])
    lo = [0.0] * E + [-1.0] * (K * E) + [0.0] * (K * E)
    hi = [1.0] * E + [1.0] * (K * E) + [1.0] * (K * E)
    kind = [BINARY] * E + [CONTINUOUS] * (2 * K * E)
    out_edges: dict[int, list[int]] = {v: [] for v in range(nodes)}
    in_edges: dict[int, list[int]] = {v: [] for v in range(nodes)}
    for e, (i, j) in enumerate(edge_list):
        out_edges[i].append(e)
        in_edges[j].append(e)
    rows = []
    for p in range(K):
        for v in range(nodes):
            terms = [(xe(p, e), 1.0) for e in out_edges[v]]
            terms += [(xe(p, e), -1.0) for e in in_edges[v]]
            rhs = (1.0 if v == src[p] else 0.0) - (1.0 if v == dst[p] else 0.0)
            rows.append((terms, EQ, rhs))
    for e in range(E):
        terms = [(ze(p, e), float(dem[p])) for p in range(K)] + [(e, -float(cap[e]))]
        rows.append((terms, LE, 0.0))
    for p in range(K):
        for e in range(E):
            rows.append(([(xe(p, e), 1.0), (ze(p, e), -1.0)], LE, 0.0))
            rows.append(([(xe(p, e), -1.0), (ze(p, e), -1.0)], LE, 0.0))
    return make_instance("fcnf", MINIMIZE, obj, lo, hi, kind, rows)


# --- 0/1 set packing and covering ---------------------------------------------------


def _zero_one_rows(rng, n: int, m: int):
    lo_cnt = 2 * n // 25 + 1
    hi_cnt = max(3 * n // 25 - 1, lo_cnt)  # the interval collapses for tiny n
    rows = []
    for _ in range(m):
        target = int(rng.integers(lo_cnt, hi_cnt + 1))
        mask = rng.random(n) < target / n
        rows.append([j for j in range(n) if mask[j]])
    return rows


def _set_packing(rng, ov) -> Instance:
    dims = _take(ov, {"n": 200, "m": 1000})
    n, m = dims["n"], dims["m"]
    c = rng.integers(1, 101, n)
    support = _zero_one_rows(rng, n, m)
    rows = [([(j, 1.0) for j in row], LE, 1.0) for row in support]
    return make_instance("set_packing", MAXIMIZE, c.astype(float), [0.0] * n, [1.0] * n, [BINARY] * n, rows)


def _set_covering(rng, ov) -> Instance:
    dims = _take(ov, {"n": 300, "m": 3000})
    n, m = dims["n"], dims["m"]
    c = rng.integers(1, 101, n)
    support = _zero_one_rows(rng, n, m)
    rows = [([(j, 1.0) for j in row], GE, 1.0) for row in support]
    return make_instance("set_covering", MINIMIZE, c.astype(float), [0.0] * n, [1.0] * n, [BINARY] * n, rows)


# --- independent set via clique edge cover --------------------------------------------


def _barabasi_albert(rng, nodes: int, affinity: int):
    """Preferential-attachment graph; the first attached node gets a star."""
    if not 1 <= affinity < nodes:
        raise ValueError("affinity must be in [1, nodes)")
    degrees = np.zeros(nodes, dtype=np.int64)
    neighbors: list[set[int]] = [set() for _ in range(nodes)]
    edges: list[tuple[int, int]] = []
    for new in range(affinity, nodes):
        if new == affinity:
            targets = np.arange(new)
        else:
            prob = degrees[:new] / degrees[:new].sum()
            targets = rng.choice(new, size=affinity, replace=False, p=prob)
        for t in sorted(int(t) for t in targets):
            edges.append((t, new))
            degrees[t] += 1
            degrees[new] += 1
            neighbors[t].add(new)
            neighbors[new].add(t)
    return degrees, neighbors, edges


def _greedy_clique_edge_cover(degrees, neighbors, edges):
    """Cover all edges by cliques, seeding each from the lowest-degree uncovered edge."""
    uncovered = set(edges)
    cliques = []
    while uncovered:
        u, v = min(uncovered, key=lambda e: (int(degrees[e[0]] + degrees[e[1]]), e))
        clique = {u, v}
        cand = neighbors[u] & neighbors[v]
        while cand:
            w = max(cand, key=lambda x: (int(degrees[x]), -x))
            clique.add(w)
            cand = cand & neighbors[w]
        cliques.append(sorted(clique))
        members = sorted(clique)
        for a_i in range(len(members)):
            for b_i in range(a_i + 1, len(members)):
                uncovered.discard((members[a_i], members[b_i]))
    return cliques


def _independent_set(rng, ov) -> Instance:
    dims = _take(ov, {"nodes": 500, "affinity": 4})
    nodes, affinity = dims["nodes"], dims["affinity"]
    degrees, neighbors, edges = _barabasi_albert(rng, nodes, affinity)
    cliques = _greedy_clique_edge_cover(degrees, neighbors, edges)
    rows = [([(v, 1.0) for v in clique], LE, 1.0) for clique in cliques]
    return make_instance(
        "independent_set", MAXIMIZE, [1.0] * nodes, [0.0] * nodes, [1.0] * nodes, [BINARY] * nodes, rows
    )


# --- capacitated facility location ------------------------------------------------------


def _cflp(rng, ov) -> Instance:
    dims = _take(ov, {"customers": 100, "facilities": 100, "ratio": 5.0})
    nc, nf, ratio = dims["customers"], dims["facilities"], dims["ratio"]
    c_pos = rng.random((nc, 2))
    f_pos = rng.random((nf, 2))
    demand = rng.integers(5, 36, nc)
    capacity = rng.integers(10, 161, nf).astype(float)
    fixed = rng.integers(100, 111, nf) * np.sqrt(capacity) + rng.integers(0, 91, nf)
    dist = np.sqrt(((c_pos[:, None, :] - f_pos[None, :, :]) ** 2).sum(axis=2))
    trans = 10.0 * demand[:, None] * dist
    capacity *= ratio * demand.sum() / capacity.sum()

    y0, x0 = 0, nf

    def xij(i, j):
        return x0 + i * nf + j

    nv = nf + nc * nf
    obj = np.zeros(nv)
    obj[:nf] = fixed
    for i in range(nc):
        obj[x0 + i * nf : x0 + (i + 1) * nf] = trans[i]
    lo = [0.0] * nv
    hi = [1.0] * nv
    kind = [BINARY] * nf + [CONTINUOUS] * (nc * nf)
    rows = []
    for i in range(nc):
        rows.append(([(xij(i, j), 1.0) for j in range(nf)], EQ, 1.0))
    for j in range(nf):
        terms = [(xij(i, j), float(demand[i])) for i in range(nc)] + [(j, -float(capacity[j]))]
        rows.append((terms, LE, 0.0))
    return make_instance("cflp", MINIMIZE, obj, lo, hi, kind, rows)


# --- combinatorial auctions (arbitrary-relationships scheme) ------------------------------

_CA_MIN_VALUE = 1.0
_CA_MAX_VALUE = 100.0
_CA_VALUE_DEVIATION = 0.5
_CA_ADD_ITEM_PROB = 0.9
_CA_MAX_SUB_BIDS = 5
_CA_ADDITIVITY = 0.2
_CA_BUDGET_FACTOR = 1.5
_CA_RESALE_FACTOR = 0.5


def _comb_auction(rng, ov) -> Instance:
    dims = _take(ov, {"items": 200, "bids": 1000})
    n_items, n_bids = dims["items"], dims["bids"]

    values = _CA_MIN_VALUE + (_CA_MAX_VALUE - _CA_MIN_VALUE) * rng.random(n_items)
    compats = np.triu(rng.random((n_items, n_items)), k=1)
    compats = compats + compats.T
    compats = compats / compats.sum(axis=1, keepdims=True)

    def next_item(mask, interests):
        prob = (1 - mask) * interests * compats[mask.astype(bool), :].mean(axis=0)
        prob = prob / prob.sum()
        return int(rng.choice(n_items, p=prob))

    bids: list[tuple[list[int], float]] = []
    n_dummy = 0
    while len(bids) < n_bids:
        interests = rng.random(n_items)
        private = values + _CA_MAX_VALUE * _CA_VALUE_DEVIATION * (2 * interests - 1)
        bidder: dict[frozenset, float] = {}

        prob = interests / interests.sum()
        item = int(rng.choice(n_items, p=prob))
        mask = np.zeros(n_items, dtype=np.int64)
        mask[item] = 1
        while rng.random() < _CA_ADD_ITEM_PROB:
            if mask.sum() == n_items:
                break
            mask[next_item(mask, interests)] = 1
        bundle = np.flatnonzero(mask)
        price = private[bundle].sum() + len(bundle) ** (1 + _CA_ADDITIVITY)
        if price < 0:
            continue
        bidder[frozenset(int(b) for b in bundle)] = float(price)

        subs = []
        for item in bundle:
            sub_mask = np.zeros(n_items, dtype=np.int64)
            sub_mask[item] = 1
            while sub_mask.sum() < len(bundle):
                sub_mask[next_item(sub_mask, interests)] = 1
            sub = np.flatnonzero(sub_mask)
            subs.append((sub, float(private[sub].sum() + len(sub) ** (1 + _CA_ADDITIVITY))))

        budget = _CA_BUDGET_FACTOR * price
        min_resale = _CA_RESALE_FACTOR * values[bundle].sum()
        for pos in np.argsort([-p for _, p in subs], kind="stable"):
            sub, sub_price = subs[int(pos)]
            if len(bidder) >= _CA_MAX_SUB_BIDS + 1 or len(bids) + len(bidder) >= n_bids:
                break
            if sub_price < 0 or sub_price > budget or values[sub].sum() < min_resale:
                continue
            key = frozenset(int(b) for b in sub)
            if key in bidder:
                continue
            bidder[key] = sub_price

        dummy = []
        if len(bidder) > 2:
            dummy = [n_items + n_dummy]
            n_dummy += 1
        for key, p in bidder.items():
            bids.append((sorted(key) + dummy, p))

    prices = [p for _, p in bids]
    per_item: dict[int, list[int]] = {}
    for b, (bundle, _) in enumerate(bids):
        for item in bundle:
            per_item.setdefault(item, []).append(b)
    rows = [([(b, 1.0) for b in per_item[item]], LE, 1.0) for item in sorted(per_item)]
    nb = len(bids)
    return make_instance("comb_auction", MAXIMIZE, prices, [0.0] * nb, [1.0] * nb, [BINARY] * nb, rows)


_BUILDERS = {
    "mdk_small": lambda rng, ov: _mdk(rng, ov, 0.25),
    "mdk_medium": lambda rng, ov: _mdk(rng, ov, 0.50),
    "mdk_large": lambda rng, ov: _mdk(rng, ov, 0.75),
    "lotsizing": _lotsizing,
    "bigbucket": _bigbucket,
    "matching": _matching,
    "weighted_coverage": _weighted_coverage,
    "portfolio_ccp": _portfolio_ccp,
    "fcnf": _fcnf,
    "set_packing": _set_packing,
    "set_covering": _set_covering,
    "independent_set": _independent_set,
    "cflp": _cflp,
    "comb_auction": _comb_auction,
}
