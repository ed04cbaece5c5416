"""Exact minimization of the pairwise energy with lambda = 0 via s-t min cut.

Source side of the cut is ink (sigma = 1). A directed pair term
``V s_i s_j`` with ``V <= 0`` is rewritten as ``V s_i + (-V) s_i (1 - s_j)``:
an arc ``i -> j`` of capacity ``-V`` plus ``V`` folded into the unary term of
``i``. A unary ``u s_i`` becomes ``i -> sink`` with capacity ``u`` when
``u >= 0`` and ``source -> i`` with capacity ``-u`` (plus the constant ``u``)
otherwise. All energies are scaled to int64 with quantum ``1e-9 * c1``.

Fiber cells are held at sigma = 0 and left out of the network; their pair
terms vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._maxflow import max_flow_min_cut
from .energy import EnergyBreakdown, EnergyParams, PairwiseModel, energy_direct, pairwise_model
from .lattice import Grid

__all__ = [
    "UnsupportedModelError",
    "NonSubmodularError",
    "FlowNetwork",
    "QUANTUM",
    "build_network",
    "max_flow",
    "min_cut",
    "solve_infinite",
    "scaled_energy",
]

QUANTUM = 1e-9  # relative to c1


class UnsupportedModelError(ValueError):
    """The volume coupling (lambda != 0) is not representable as a cut."""


class NonSubmodularError(ValueError):
    """A pair weight is positive, so the energy is not graph-representable."""


@dataclass
class FlowNetwork:
    grid: Grid
    cells: np.ndarray  # flat index of each non-terminal node
    source: int
    sink: int
    tail: np.ndarray
    head: np.ndarray
    cap_fwd: np.ndarray
    cap_bwd: np.ndarray
    quantum: float
    constant: int  # scaled; energy = cut + constant

    @property
    def n_nodes(self) -> int:
        return len(self.cells) + 2

    @property
    def n_terminal_arcs(self) -> int:
        return int(np.count_nonzero((self.tail == self.source) | (self.head == self.sink)))

    @property
    def n_pair_arcs(self) -> int:
        return len(self.tail) - self.n_terminal_arcs


def _scaled(x, q):
    return np.rint(np.asarray(x, dtype=np.float64) / q).astype(np.int64)


def scaled_energy(sigma: np.ndarray, model: PairwiseModel, quantum: float | None = None) -> int:
    """Integer pairwise energy (lambda-free part) in units of the quantum."""
    from .lattice import neighbor_sum

    q = quantum if quantum is not None else QUANTUM * model.params.c1
    s = np.asarray(sigma, dtype=np.int64)
    k1, k2 = neighbor_sum(s, 1), neighbor_sum(s, 2)
    return int(
        np.sum(_scaled(model.D1, q) * s)
        + int(_scaled(model.V1, q)) * int(np.sum(s * k1))
        + int(_scaled(model.V2, q)) * int(np.sum(s * k2))
    )


def build_network(model: PairwiseModel, *, exclude_solid: bool = True) -> FlowNetwork:
    if model.V3 != 0 or model.lam != 0:
        raise UnsupportedModelError(
            f"volume coupling lambda={model.lam} cannot be expressed as a cut; set lambda = 0"
        )
    if model.V1 > 0 or model.V2 > 0:
        raise NonSubmodularError(f"pair weights V1={model.V1}, V2={model.V2} must be <= 0")
    grid = model.grid
    q = QUANTUM * model.params.c1
    free = (model.phi == 0) if exclude_solid else np.ones(grid.shape, dtype=bool)
    free_flat = free.ravel()
    cells = np.flatnonzero(free_flat)
    node_of = np.full(grid.n_cells, -1, dtype=np.int64)
    node_of[cells] = np.arange(len(cells))
    m = len(cells)
    source, sink = m, m + 1

    unary = _scaled(model.D1.ravel()[cells], q)
    tails, heads, caps = [], [], []
    for layer, V in ((1, model.V1), (2, model.V2)):
        w = int(_scaled(V, q))
        if w == 0:
            continue
        src, dst = model.directed_pairs(layer)
        keep = free_flat[src] & free_flat[dst]
        a, b = node_of[src[keep]], node_of[dst[keep]]
        np.add.at(unary, a, w)
        # each unordered pair appears twice; one arc pair carries both directions
        once = a < b
        tails.append(a[once])
        heads.append(b[once])
        caps.append(np.full(int(once.sum()), -w, dtype=np.int64))

    pos = unary >= 0
    nodes = np.arange(m, dtype=np.int64)
    tails += [np.full(int((~pos).sum()), source, dtype=np.int64), nodes[pos]]
    heads += [nodes[~pos], np.full(int(pos.sum()), sink, dtype=np.int64)]
    caps += [-unary[~pos], unary[pos]]
    n_pair = sum(len(c) for c in caps[:-2])
    tail = np.concatenate(tails) if tails else np.empty(0, np.int64)
    head = np.concatenate(heads) if heads else np.empty(0, np.int64)
    cap = np.concatenate(caps) if caps else np.empty(0, np.int64)
    cap_bwd = np.zeros_like(cap)
    cap_bwd[:n_pair] = cap[:n_pair]
    return FlowNetwork(
        grid=grid,
        cells=cells,
        source=source,
        sink=sink,
        tail=tail,
        head=head,
        cap_fwd=cap,
        cap_bwd=cap_bwd,
        quantum=q,
        constant=int(unary[~pos].sum()),
    )


def min_cut(network: FlowNetwork) -> tuple[int, np.ndarray]:
    """Like :func:`max_flow` but the cut value stays in integer quanta."""
    flow, side = max_flow_min_cut(
        network.n_nodes, network.tail, network.head, network.cap_fwd, network.cap_bwd,
        network.source, network.sink,
    )
    sigma = np.zeros(network.grid.n_cells, dtype=np.uint8)
    sigma[network.cells[side[: len(network.cells)]]] = 1
    return flow, sigma.reshape(network.grid.shape)


def max_flow(network: FlowNetwork) -> tuple[float, np.ndarray]:
    """Return ``(cut value, sigma)``; the cut value is in energy units.

    Ties resolve to the minimal source set, so undecided cells get sigma = 0.
    """
    flow, sigma = min_cut(network)
    return flow * network.quantum, sigma


def solve_infinite(phi: np.ndarray, params: EnergyParams, grid: Grid) -> tuple[np.ndarray, EnergyBreakdown]:
    """Global minimizer of the interaction energy (no volume constraint)."""
    model = pairwise_model(phi, params, grid)
    net = build_network(model)
    _, sigma = max_flow(net)
    return sigma, energy_direct(sigma, phi, params, grid)
