"""Metric graphs: vertex scattering conditions, eigenwavenumbers, periodic orbits.

A metric graph carries waves on one-dimensional bonds; each vertex relates
incoming to outgoing amplitudes through a unitary scattering matrix.  Bond b
contributes two directed bonds, 2b (A to B) and 2b+1 (B to A).  Eigenwavenumbers
are the k where the directed-bond operator U(k) = D(k) S_B(k) has eigenvalue 1,
with D(k) the diagonal of propagation phases exp(i k l) and S_B(k) the
vertex-assembled bond-to-bond matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Vertex conditions
# ---------------------------------------------------------------------------

def neumann_vertex_matrix(valency: int) -> np.ndarray:
    """Current-conserving matrix 2/v - delta_ab for a valency-v vertex."""
    if valency < 1:
        raise ValueError("valency must be a positive integer")
    v = int(valency)
    return np.full((v, v), 2.0 / v) - np.eye(v)


def dirichlet_vertex_matrix(valency: int) -> np.ndarray:
    """Total reflection with sign flip: -identity."""
    if valency < 1:
        raise ValueError("valency must be a positive integer")
    return -np.eye(int(valency))


def _check_unitary(m: np.ndarray, tol: float, what: str) -> None:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{what}: matrix must be square, got shape {m.shape}")
    defect = np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0])))
    if defect > tol:
        raise ValueError(f"{what}: unitarity defect {defect:.3e} exceeds {tol:.1e}")


def nearest_unitary(m: np.ndarray) -> np.ndarray:
    """Polar projection onto the unitary group (via SVD)."""
    u, _, vh = np.linalg.svd(np.asarray(m, dtype=complex))
    return u @ vh


class VertexCondition:
    """Base class; subclasses provide the scattering matrix at wavenumber k."""

    k_dependent = False

    def matrix_at(self, k: float, valency: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Neumann(VertexCondition):
    def matrix_at(self, k, valency):
        return neumann_vertex_matrix(valency).astype(complex)


@dataclass(frozen=True)
class Dirichlet(VertexCondition):
    def matrix_at(self, k, valency):
        return dirichlet_vertex_matrix(valency).astype(complex)


@dataclass(frozen=True)
class CustomUnitary(VertexCondition):
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        _check_unitary(m, 1e-10, "CustomUnitary")
        object.__setattr__(self, "matrix", m)

    def matrix_at(self, k, valency):
        if self.matrix.shape[0] != valency:
            raise ValueError(
                f"vertex matrix dimension {self.matrix.shape[0]} != valency {valency}")
        return self.matrix


@dataclass(frozen=True)
class TabulatedK(VertexCondition):
    """Unitary matrices tabulated on an ascending k grid, no extrapolation.

    Between grid points the matrix is interpolated entrywise and projected
    back onto the unitary group, which keeps flux conservation exact.
    """

    k_grid: np.ndarray
    matrices: np.ndarray  # shape (npoints, v, v)

    k_dependent = True

    def __post_init__(self):
        grid = np.asarray(self.k_grid, dtype=float)
        mats = np.asarray(self.matrices, dtype=complex)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("TabulatedK needs at least two grid points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("TabulatedK grid must be strictly ascending")
        if mats.ndim != 3 or mats.shape[0] != grid.size or mats.shape[1] != mats.shape[2]:
            raise ValueError("TabulatedK matrices must be (npoints, v, v)")
        for i in range(mats.shape[0]):
            _check_unitary(mats[i], 1e-10, f"TabulatedK[{i}]")
        object.__setattr__(self, "k_grid", grid)
        object.__setattr__(self, "matrices", mats)

    def matrix_at(self, k, valency):
        if self.matrices.shape[1] != valency:
            raise ValueError(
                f"vertex matrix dimension {self.matrices.shape[1]} != valency {valency}")
        grid = self.k_grid
        if k < grid[0] or k > grid[-1]:
            raise ValueError(
                f"k={k:g} outside tabulated range [{grid[0]:g}, {grid[-1]:g}]")
        j = int(np.searchsorted(grid, k, side="right") - 1)
        j = min(j, grid.size - 2)
        t = (k - grid[j]) / (grid[j + 1] - grid[j])
        blend = (1.0 - t) * self.matrices[j] + t * self.matrices[j + 1]
        return nearest_unitary(blend)


def vertex_matrix_at(condition: VertexCondition, k: float, valency: int) -> np.ndarray:
    """Scattering matrix of a vertex condition at wavenumber k."""
    return condition.matrix_at(k, valency)


# ---------------------------------------------------------------------------
# Graph structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bond:
    id: int
    vertex_a: int
    vertex_b: int
    length: float


@dataclass(frozen=True)
class MetricGraph:
    """Vertices with scattering conditions joined by bonds of fixed length."""

    vertex_conditions: dict[int, VertexCondition]
    bonds: tuple[Bond, ...]
    allow_disconnected: bool = False

    def __post_init__(self):
        bonds = tuple(sorted((Bond(b.id, b.vertex_a, b.vertex_b, float(b.length))
                              for b in self.bonds), key=lambda b: b.id))
        object.__setattr__(self, "bonds", bonds)
        object.__setattr__(self, "vertex_conditions", dict(self.vertex_conditions))
        ids = [b.id for b in bonds]
        if len(set(ids)) != len(ids):
            raise ValueError("bond ids must be unique")
        for b in bonds:
            if b.vertex_a not in self.vertex_conditions or b.vertex_b not in self.vertex_conditions:
                raise ValueError(f"bond {b.id} references an unknown vertex")
            if not (b.length > 0 and math.isfinite(b.length)):
                raise ValueError(f"bond {b.id} length must be positive and finite")
        if not bonds:
            raise ValueError("graph needs at least one bond")
        if not self.allow_disconnected and not self._connected():
            raise ValueError("graph is not connected (pass allow_disconnected=True to override)")

    def _connected(self) -> bool:
        verts = set(self.vertex_conditions)
        adj: dict[int, set[int]] = {v: set() for v in verts}
        for b in self.bonds:
            adj[b.vertex_a].add(b.vertex_b)
            adj[b.vertex_b].add(b.vertex_a)
        start = next(iter(verts))
        seen = {start}
        stack = [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen == verts

    # -- directed-bond bookkeeping ------------------------------------------

    @property
    def n_bonds(self) -> int:
        return len(self.bonds)

    @property
    def total_length(self) -> float:
        return float(sum(b.length for b in self.bonds))

    def valency(self, vertex: int) -> int:
        return sum((b.vertex_a == vertex) + (b.vertex_b == vertex) for b in self.bonds)

    def directed_lengths(self) -> np.ndarray:
        out = np.empty(2 * self.n_bonds)
        for pos, b in enumerate(self.bonds):
            out[2 * pos] = b.length
            out[2 * pos + 1] = b.length
        return out

    def directed_origin(self, d: int) -> int:
        b = self.bonds[d // 2]
        return b.vertex_a if d % 2 == 0 else b.vertex_b

    def directed_terminus(self, d: int) -> int:
        b = self.bonds[d // 2]
        return b.vertex_b if d % 2 == 0 else b.vertex_a

    def reversed_directed(self, d: int) -> int:
        return d ^ 1

    def vertex_slots(self) -> dict[int, list[tuple[int, int]]]:
        """Per vertex: ordered incidence slots (bond position, end 0=A / 1=B)."""
        slots: dict[int, list[tuple[int, int]]] = {v: [] for v in self.vertex_conditions}
        for pos, b in enumerate(self.bonds):
            slots[b.vertex_a].append((pos, 0))
            slots[b.vertex_b].append((pos, 1))
        for v in slots:
            slots[v].sort()
        return slots

    @property
    def k_dependent(self) -> bool:
        return any(c.k_dependent for c in self.vertex_conditions.values())


# -- convenience constructors -----------------------------------------------

def interval_graph(length: float = 1.0,
                   left: VertexCondition | None = None,
                   right: VertexCondition | None = None) -> MetricGraph:
    left = left if left is not None else Dirichlet()
    right = right if right is not None else Dirichlet()
    return MetricGraph({0: left, 1: right}, (Bond(0, 0, 1, length),))


def circle_graph(circumference: float = 1.0) -> MetricGraph:
    return MetricGraph({0: Neumann()}, (Bond(0, 0, 0, circumference),))


def star_graph(lengths, center: VertexCondition | None = None,
               tips: VertexCondition | None = None) -> MetricGraph:
    center = center if center is not None else Neumann()
    tips = tips if tips is not None else Dirichlet()
    conds: dict[int, VertexCondition] = {0: center}
    bonds = []
    for i, l in enumerate(lengths):
        conds[i + 1] = tips
        bonds.append(Bond(i, 0, i + 1, float(l)))
    return MetricGraph(conds, tuple(bonds))


def tetrahedron_graph(total_length: float = 5.814) -> MetricGraph:
    """Complete graph on four Neumann vertices with incommensurate bond lengths.

    Lengths are proportional to sqrt(2), sqrt(3), sqrt(5), sqrt(7), sqrt(11),
    sqrt(13) and rescaled to the requested total metric length.
    """
    raw = np.sqrt([2.0, 3.0, 5.0, 7.0, 11.0, 13.0])
    lengths = raw * (total_length / raw.sum())
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    conds = {v: Neumann() for v in range(4)}
    bonds = tuple(Bond(i, a, b, float(l)) for i, ((a, b), l) in enumerate(zip(pairs, lengths)))
    return MetricGraph(conds, bonds)


# ---------------------------------------------------------------------------
# Secular operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BondScatteringOperator:
    """U(k) = D(k) S_B(k) together with its factors."""

    k: float
    matrix: np.ndarray
    phase_diagonal: np.ndarray
    vertex_part: np.ndarray


class _SecularEngine:
    """Precomputed assembly machinery for one graph."""

    def __init__(self, graph: MetricGraph):
        self.graph = graph
        self.n_dir = 2 * graph.n_bonds
        self.dir_lengths = graph.directed_lengths()
        self.total_dir_length = float(self.dir_lengths.sum())
        # per vertex: slot -> (outgoing directed, incoming directed)
        self._vertex_io: list[tuple[int, np.ndarray, np.ndarray]] = []
        for v, slots in graph.vertex_slots().items():
            outs = np.array([2 * pos + end for pos, end in slots], dtype=int)
            ins = np.array([2 * pos + (1 - end) for pos, end in slots], dtype=int)
            self._vertex_io.append((v, outs, ins))
        self._const_sb = None if graph.k_dependent else self._assemble_sb(1.0)
        self._const_sb_phase = (None if self._const_sb is None
                                else float(np.angle(np.linalg.det(self._const_sb))))

    def _assemble_sb(self, k: float) -> np.ndarray:
        sb = np.zeros((self.n_dir, self.n_dir), dtype=complex)
        for v, outs, ins in self._vertex_io:
            sigma = self.graph.vertex_conditions[v].matrix_at(k, outs.size)
            sb[np.ix_(outs, ins)] = sigma
        return sb

    def sb(self, k: float) -> np.ndarray:
        return self._const_sb if self._const_sb is not None else self._assemble_sb(k)

    def u(self, k: float) -> np.ndarray:
        return np.exp(1j * k * self.dir_lengths)[:, None] * self.sb(k)

    def u_batch(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=float)
        phases = np.exp(1j * ks[:, None] * self.dir_lengths[None, :])
        if self._const_sb is not None:
            return phases[:, :, None] * self._const_sb[None, :, :]
        return np.stack([phases[i][:, None] * self._assemble_sb(k)
                         for i, k in enumerate(ks)])

    def sb_phase(self, k: float, anchor_k: float | None = None,
                 anchor_phase: float | None = None) -> float:
        """arg det S_B(k) on a branch continuous with the given anchor."""
        if self._const_sb_phase is not None:
            return self._const_sb_phase
        raw = float(np.angle(np.linalg.det(self._assemble_sb(k))))
        if anchor_phase is None:
            return raw
        return anchor_phase + _wrap_pi(raw - anchor_phase)

    def counting_batch(self, ks: np.ndarray, sb_phases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Counting function m(k) (up to a constant) and min |eigenphase|.

        m(k) = (L_dir k + arg det S_B(k) - sum of principal eigenphases)/2pi
        increases by 1 whenever an eigenphase of U(k) crosses zero from below,
        i.e. at every eigenwavenumber, degeneracies included.
        """
        ks = np.asarray(ks, dtype=float)
        eig = np.linalg.eigvals(self.u_batch(ks))
        principal = np.mod(np.angle(eig), TWO_PI)  # [0, 2pi)
        psum = principal.sum(axis=1)
        wrapped = np.abs(_wrap_pi(np.angle(eig)))
        m = (self.total_dir_length * ks + sb_phases - psum) / TWO_PI
        return m, wrapped.min(axis=1)


def _wrap_pi(x):
    return (np.asarray(x) + math.pi) % TWO_PI - math.pi


def bond_scattering_matrix(graph: MetricGraph, k: float) -> BondScatteringOperator:
    """Directed-bond operator U(k) with its phase and vertex factors."""
    if not (k > 0):
        raise ValueError("k must be positive")
    eng = _SecularEngine(graph)
    sb = eng.sb(k)
    d = np.exp(1j * k * eng.dir_lengths)
    return BondScatteringOperator(k=k, matrix=d[:, None] * sb, phase_diagonal=d, vertex_part=sb)


def secular_indicator(graph: MetricGraph, k: float) -> tuple[float, np.ndarray]:
    """|det(I - U(k))| and the eigenphases of U(k) in (-pi, pi]."""
    if not (k > 0):
        raise ValueError("k must be positive")
    u = _SecularEngine(graph).u(k)
    eig = np.linalg.eigvals(u)
    magnitude = float(np.abs(np.prod(1.0 - eig)))
    phases = np.angle(eig)
    phases = np.where(phases <= -math.pi, math.pi, phases)
    return magnitude, np.sort(phases)


def weyl_estimate(graph: MetricGraph, k: float) -> float:
    """Smooth counting estimate (total length) * k / pi."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return graph.total_length * k / math.pi


def cycle_rank(graph: MetricGraph) -> int:
    """Number of independent cycles, B - V + 1 for a connected graph.

    The mean counting staircase of a graph with current-conserving vertex
    conditions sits at weyl_estimate(k) - cycle_rank/2; the constant matters
    when checking a computed spectrum for completeness.
    """
    return graph.n_bonds - len(graph.vertex_conditions) + 1


# ---------------------------------------------------------------------------
# Eigenvalue search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenvalueList:
    """Roots of the secular equation with multiplicities and phase residuals."""

    values: np.ndarray
    multiplicities: np.ndarray
    residuals: np.ndarray

    def expand(self) -> np.ndarray:
        """Values repeated by multiplicity (ascending)."""
        return np.repeat(self.values, self.multiplicities)

    def __len__(self) -> int:
        return self.values.size


def find_eigenwavenumbers(graph: MetricGraph, k_min: float, k_max: float, *,
                          scan_step_fraction: float = 0.1,
                          root_tol: float = 1e-10,
                          degeneracy_tol: float = 1e-8,
                          max_bisections: int = 200) -> EigenvalueList:
    """All eigenwavenumbers in (k_min, k_max] by eigenphase counting.

    The integer counting function jumps by the root multiplicity at each
    eigenwavenumber; every jump is localized by bisection until the crossing
    eigenphase is below root_tol.  Roots closer than degeneracy_tol * k are
    merged with summed multiplicity.
    """
    if not (0 < k_min < k_max):
        raise ValueError("need 0 < k_min < k_max")
    eng = _SecularEngine(graph)
    mean_spacing = math.pi / graph.total_length
    step = scan_step_fraction * mean_spacing
    n_steps = max(2, int(math.ceil((k_max - k_min) / step)) + 1)
    ks = np.linspace(k_min, k_max, n_steps)

    if eng._const_sb_phase is not None:
        sb_phases = np.full(ks.size, eng._const_sb_phase)
    else:
        raw = np.array([float(np.angle(np.linalg.det(eng._assemble_sb(k)))) for k in ks])
        sb_phases = np.unwrap(raw)

    m_raw, _ = eng.counting_batch(ks, sb_phases)
    m_int = np.rint(m_raw).astype(int)

    # one bisection problem per unit jump of the counting function
    lo_list, hi_list, target_list = [], [], []
    lo_phase, hi_phase = [], []
    for i in range(ks.size - 1):
        jump = m_int[i + 1] - m_int[i]
        for t in range(1, jump + 1):
            lo_list.append(ks[i])
            hi_list.append(ks[i + 1])
            target_list.append(m_int[i] + t - 0.5)
            lo_phase.append(sb_phases[i])
            hi_phase.append(sb_phases[i + 1])
    if not lo_list:
        empty = np.array([])
        return EigenvalueList(empty, np.array([], dtype=int), empty.copy())

    lo = np.array(lo_list)
    hi = np.array(hi_list)
    target = np.array(target_list)
    # slowly varying branch anchor for k-dependent vertex conditions
    anchor_phase = np.array(lo_phase)

    # bracket width guaranteeing the crossing eigenphase sits below root_tol
    # (eigenphase speed is bounded by the longest directed bond)
    width_tol = root_tol / (4.0 * float(np.max(eng.dir_lengths)))

    roots = np.full(lo.size, np.nan)
    res = np.full(lo.size, np.nan)
    active = np.ones(lo.size, dtype=bool)
    for _ in range(max_bisections):
        if not active.any():
            break
        mid = 0.5 * (lo[active] + hi[active])
        if eng._const_sb_phase is not None:
            mid_sb = np.full(mid.size, eng._const_sb_phase)
        else:
            mid_sb = np.array([eng.sb_phase(k, anchor_phase=p)
                               for k, p in zip(mid, anchor_phase[active])])
        m_mid, minphase = eng.counting_batch(mid, mid_sb)
        above = m_mid > target[active]
        idx = np.flatnonzero(active)
        hi[idx[above]] = mid[above]
        lo[idx[~above]] = mid[~above]
        done = ((hi[idx] - lo[idx]) < width_tol) & (minphase < root_tol)
        roots[idx[done]] = mid[done]
        res[idx[done]] = minphase[done]
        active[idx[done]] = False
    if active.any():
        bad = np.flatnonzero(active)[0]
        raise RuntimeError(
            f"bisection did not converge in [{lo[bad]:.12g}, {hi[bad]:.12g}] "
            f"after {max_bisections} iterations")

    order = np.argsort(roots)
    roots, res = roots[order], res[order]

    values, mults, residuals = [], [], []
    for r, e in zip(roots, res):
        tol = degeneracy_tol * max(abs(r), 1.0)
        if values and r - values[-1] <= tol:
            mults[-1] += 1
            residuals[-1] = max(residuals[-1], e)
        else:
            values.append(r)
            mults.append(1)
            residuals.append(e)
    return EigenvalueList(np.array(values), np.array(mults, dtype=int), np.array(residuals))


# ---------------------------------------------------------------------------
# Periodic orbits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicOrbit:
    """Cyclic directed-bond itinerary with its metric length."""

    directed_bonds: tuple[int, ...]
    vertices: tuple[int, ...]
    length: float
    primitive: bool


def _canonical_rotation(seq: tuple[int, ...]) -> tuple[int, ...]:
    n = len(seq)
    return min(tuple(seq[i:] + seq[:i]) for i in range(n))


def _is_primitive(seq: tuple[int, ...]) -> bool:
    n = len(seq)
    for p in range(1, n):
        if n % p == 0 and seq == seq[p:] + seq[:p]:
            return False
    return True


def enumerate_periodic_orbits(graph: MetricGraph, max_metric_length: float, *,
                              catalog_cap: int = 200_000) -> list[PeriodicOrbit]:
    """All periodic orbits up to a metric length, one per cyclic class.

    Orbits are closed walks in the directed-bond graph, including immediate
    back-scattering round trips of length 2 l_b.  Time-reversed partners are
    kept as distinct entries.
    """
    if not (max_metric_length > 0):
        raise ValueError("max_metric_length must be positive")
    n_dir = 2 * graph.n_bonds
    lengths = graph.directed_lengths()
    orig = np.array([graph.directed_origin(d) for d in range(n_dir)])
    term = np.array([graph.directed_terminus(d) for d in range(n_dir)])
    succ = [np.flatnonzero(orig == term[d]).tolist() for d in range(n_dir)]

    found: dict[tuple[int, ...], float] = {}

    def record(path: tuple[int, ...], length: float) -> None:
        key = _canonical_rotation(path)
        if key not in found:
            found[key] = length
            if len(found) > catalog_cap:
                raise RuntimeError(f"periodic-orbit catalog exceeded cap of {catalog_cap}")

    def extend(path: list[int], acc: float, start: int) -> None:
        d = path[-1]
        for nxt in succ[d]:
            if nxt < start:
                continue
            nl = acc + lengths[nxt]
            if nl > max_metric_length:
                continue
            path.append(nxt)
            if term[nxt] == orig[start]:
                record(tuple(path), float(nl))
            extend(path, nl, start)
            path.pop()

    for start in range(n_dir):
        l0 = float(lengths[start])
        if l0 > max_metric_length:
            continue
        if term[start] == orig[start]:  # directed self-loop closes in one step
            record((start,), l0)
        extend([start], l0, start)

    orbits = []
    for seq, length in found.items():
        verts = tuple(int(orig[d]) for d in seq)
        orbits.append(PeriodicOrbit(seq, verts, float(length), _is_primitive(seq)))
    orbits.sort(key=lambda o: (o.length, o.directed_bonds))
    return orbits
