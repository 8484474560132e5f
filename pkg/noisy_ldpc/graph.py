"""
Finite-length Tanner graphs realised from a degree distribution.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Set, Tuple

import numpy as np
from scipy import sparse

from .degree import DegreeDistribution

logger = logging.getLogger(__name__)


class GraphConstructionError(ValueError):
    """Raised when a degree distribution cannot be realised at the requested length."""


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """
    Bipartite graph stored as a flat edge list.

    Edge ``e`` joins variable ``edge_var[e]`` and check ``edge_check[e]``; the edge index is
    the storage slot of the messages carried by that edge.
    """

    n_vars: int
    n_checks: int
    edge_var: np.ndarray
    edge_check: np.ndarray

    def __post_init__(self) -> None:
        edge_var = np.array(self.edge_var, dtype=np.int64)
        edge_check = np.array(self.edge_check, dtype=np.int64)
        if edge_var.shape != edge_check.shape or edge_var.ndim != 1:
            raise ValueError("edge_var and edge_check must be 1-D arrays of equal length")
        if edge_var.size and (edge_var.min() < 0 or edge_var.max() >= self.n_vars):
            raise ValueError("edge_var contains an out-of-range variable index")
        if edge_check.size and (edge_check.min() < 0 or edge_check.max() >= self.n_checks):
            raise ValueError("edge_check contains an out-of-range check index")
        edge_var.setflags(write=False)
        edge_check.setflags(write=False)
        object.__setattr__(self, "edge_var", edge_var)
        object.__setattr__(self, "edge_check", edge_check)

    @property
    def n_edges(self) -> int:
        return int(self.edge_var.size)

    @property
    def design_rate(self) -> float:
        return 1.0 - self.n_checks / self.n_vars

    @property
    def var_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_var, minlength=self.n_vars)

    @property
    def check_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_check, minlength=self.n_checks)

    def degree_histogram(self, side: str) -> Dict[int, int]:
        degrees = self.var_degrees if side == "variable" else self.check_degrees
        values, counts = np.unique(degrees, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}

    def var_adjacency(self) -> List[np.ndarray]:
        """Check indices attached to each variable node."""
        return _group(self.edge_var, self.edge_check, self.n_vars)

    def check_adjacency(self) -> List[np.ndarray]:
        """Variable indices attached to each check node."""
        return _group(self.edge_check, self.edge_var, self.n_checks)

    def edge_set(self) -> Set[Tuple[int, int]]:
        return set(zip(self.edge_var.tolist(), self.edge_check.tolist()))

    def parity_check_matrix(self) -> sparse.csr_matrix:
        """K x N matrix whose entries count parallel edges (0/1 for a simple graph)."""
        data = np.ones(self.n_edges, dtype=np.int64)
        return sparse.csr_matrix(
            (data, (self.edge_check, self.edge_var)), shape=(self.n_checks, self.n_vars)
        )

    def multi_edge_count(self) -> int:
        """Number of surplus parallel edges."""
        return self.n_edges - len(self.edge_set())

    def four_cycle_count(self) -> int:
        """Exhaustive count of length-4 cycles (pairs of variables sharing two checks)."""
        binary = self.parity_check_matrix()
        binary.data[:] = 1
        overlap = (binary.T @ binary).tocoo()
        upper = overlap.row < overlap.col
        shared = overlap.data[upper]
        return int(np.sum(shared * (shared - 1) // 2))


@dataclass
class CycleRemovalResult:
    """Outcome of a 4-cycle cleanup."""

    graph: TannerGraph
    residual_cycles: int
    residual_multi_edges: int
    passes: int
    swaps: int

    @property
    def clean(self) -> bool:
        return self.residual_cycles == 0 and self.residual_multi_edges == 0


def _group(keys: np.ndarray, values: np.ndarray, n_groups: int) -> List[np.ndarray]:
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n_groups)
    return np.split(values[order], np.cumsum(counts)[:-1])


def _apportion(total: int, fractions: Dict[int, float]) -> Dict[int, int]:
    """Largest-remainder apportionment of ``total`` nodes over the given degree fractions."""
    degrees = sorted(fractions)
    quotas = np.array([total * fractions[d] for d in degrees])
    counts = np.floor(quotas).astype(np.int64)
    shortfall = total - int(counts.sum())
    if shortfall > 0:
        remainders = quotas - counts
        # Stable sort keeps the lower degree first on ties.
        for index in np.argsort(-remainders, kind="stable")[:shortfall]:
            counts[index] += 1
    return {d: int(c) for d, c in zip(degrees, counts)}


def _repair_check_degrees(check_degrees: np.ndarray, surplus: int) -> None:
    """Shift single sockets between check nodes until both sides carry the same edge count."""
    if surplus == 0:
        return
    if abs(surplus) > check_degrees.size:
        raise GraphConstructionError(
            f"Edge counts differ by {abs(surplus)}, more than the {check_degrees.size} "
            "check nodes can absorb"
        )
    if surplus > 0:
        chosen = np.argsort(check_degrees, kind="stable")[:surplus]
        check_degrees[chosen] += 1
    else:
        chosen = np.argsort(-check_degrees, kind="stable")[:-surplus]
        check_degrees[chosen] -= 1
        if check_degrees.min() < 2:
            raise GraphConstructionError("Repairing edge counts would leave a check of degree < 2")


def construct(dist: DegreeDistribution, n: int, seed: int = 0) -> TannerGraph:
    """
    Random configuration-model realisation of ``dist`` with ``n`` variable nodes.

    Variable sockets are laid out in node order and matched to a seeded random permutation of
    the check sockets. The result may contain parallel edges and 4-cycles; see
    :func:`remove_four_cycles`.
    """
    if n < 1:
        raise ValueError(f"Block length must be positive, got {n}")

    var_counts = _apportion(n, dist.node_fractions("lambda"))
    n_checks = int(round(n * dist.integral("rho") / dist.integral("lambda")))
    if n_checks < 1:
        raise GraphConstructionError(f"Block length {n} yields no check nodes")
    check_counts = _apportion(n_checks, dist.node_fractions("rho"))

    empty = [d for d, c in {**var_counts, **check_counts}.items() if c == 0]
    if any(var_counts[d] == 0 for d in var_counts) or any(
        check_counts[d] == 0 for d in check_counts
    ):
        raise GraphConstructionError(
            f"Block length {n} is too small: no nodes for degree(s) {sorted(set(empty))}"
        )

    var_degrees = np.repeat(list(var_counts), list(var_counts.values()))
    check_degrees = np.repeat(list(check_counts), list(check_counts.values()))
    _repair_check_degrees(check_degrees, int(var_degrees.sum() - check_degrees.sum()))

    edge_var = np.repeat(np.arange(n), var_degrees)
    sockets = np.repeat(np.arange(n_checks), check_degrees)
    rng = np.random.default_rng(seed)
    edge_check = rng.permutation(sockets)

    graph = TannerGraph(n, n_checks, edge_var, edge_check)
    logger.info(
        f"Constructed Tanner graph: N={n}, K={n_checks}, edges={graph.n_edges}, "
        f"design rate={graph.design_rate:.4f}"
    )
    return graph


class _SwapState:
    """Mutable adjacency used while rewiring edges."""

    def __init__(self, graph: TannerGraph):
        self.edge_var = graph.edge_var
        self.edge_check = graph.edge_check.copy()
        self.var_edges = _group(graph.edge_var, np.arange(graph.n_edges), graph.n_vars)
        self.check_vars: List[List[int]] = [
            list(a) for a in _group(graph.edge_check, graph.edge_var, graph.n_checks)
        ]

    def offending_edge(self, v: int) -> Optional[int]:
        """An edge of ``v`` lying on a parallel edge or a 4-cycle, if any."""
        seen: Set[int] = set()
        used_checks: Set[int] = set()
        for e in self.var_edges[v]:
            c = int(self.edge_check[e])
            if c in used_checks:
                return int(e)
            used_checks.add(c)
            neighbours = set(self.check_vars[c])
            neighbours.discard(v)
            if seen & neighbours:
                return int(e)
            seen |= neighbours
        return None

    def swap(self, e: int, f: int) -> None:
        """Exchange the check endpoints of edges ``e`` and ``f``; node degrees are unchanged."""
        v, w = int(self.edge_var[e]), int(self.edge_var[f])
        c, d = int(self.edge_check[e]), int(self.edge_check[f])
        self.check_vars[c].remove(v)
        self.check_vars[d].remove(w)
        self.check_vars[c].append(w)
        self.check_vars[d].append(v)
        self.edge_check[e], self.edge_check[f] = d, c


def remove_four_cycles(
    graph: TannerGraph, max_passes: int = 100, seed: int = 0, max_attempts: int = 100
) -> CycleRemovalResult:
    """
    Rewire edges until no parallel edges or 4-cycles remain, or the pass budget runs out.

    Each pass collects one offending edge per offending variable and tries random partner
    edges; a swap is kept only if neither touched variable is left on a 4-cycle.
    """
    rng = np.random.default_rng(seed)
    state = _SwapState(graph)
    swaps = 0
    passes = 0

    for passes in range(1, max_passes + 1):
        offending = [
            e for e in (state.offending_edge(v) for v in range(graph.n_vars)) if e is not None
        ]
        if not offending:
            passes -= 1
            break
        logger.debug(f"Cycle removal pass {passes}: {len(offending)} offending edges")
        rng.shuffle(offending)

        for e in offending:
            v = int(state.edge_var[e])
            current = state.offending_edge(v)
            if current is None:
                continue
            for _ in range(max_attempts):
                f = int(rng.integers(graph.n_edges))
                w = int(state.edge_var[f])
                if w == v or state.edge_check[f] == state.edge_check[current]:
                    continue
                state.swap(current, f)
                if state.offending_edge(v) is None and state.offending_edge(w) is None:
                    swaps += 1
                    break
                state.swap(current, f)

    cleaned = TannerGraph(graph.n_vars, graph.n_checks, graph.edge_var, state.edge_check)
    result = CycleRemovalResult(
        graph=cleaned,
        residual_cycles=cleaned.four_cycle_count(),
        residual_multi_edges=cleaned.multi_edge_count(),
        passes=passes,
        swaps=swaps,
    )
    if result.clean:
        logger.info(f"Graph is free of 4-cycles after {passes} pass(es), {swaps} swap(s)")
    else:
        logger.warning(
            f"Pass budget exhausted with {result.residual_cycles} 4-cycle(s) and "
            f"{result.residual_multi_edges} parallel edge(s) remaining"
        )
    return result


def syndrome_ok(graph: TannerGraph, hard_bits: np.ndarray) -> bool:
    """True iff every check node sees even parity over its neighbours."""
    bits = np.asarray(hard_bits)
    if bits.shape != (graph.n_vars,):
        raise ValueError(f"Expected {graph.n_vars} hard bits, got shape {bits.shape}")
    parity = np.bincount(
        graph.edge_check, weights=bits[graph.edge_var].astype(np.float64), minlength=graph.n_checks
    )
    return bool(np.all(parity.astype(np.int64) % 2 == 0))
