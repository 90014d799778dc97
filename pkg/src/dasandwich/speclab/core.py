"""Finite-state joint tables, Markov kernels and group actions."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ConsistencyError, DegenerateInputError, ParameterError, ReversibilityError

__all__ = [
    "JointTable",
    "Kernel",
    "GroupAction",
    "build_da_kernel",
    "build_group_R",
    "build_sandwich_kernel",
    "identity_kernel",
    "projection_kernel",
    "random_table",
]

SUM_TOL = 1e-12
ROW_TOL = 1e-12
BALANCE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class JointTable:
    """Joint pmf ``f[x, y]`` over a finite product space."""

    f: np.ndarray

    def __post_init__(self):
        f = np.array(self.f, dtype=float)
        if f.ndim != 2 or f.size == 0:
            raise ParameterError(f"joint table must be a non-empty matrix, got shape {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ParameterError("joint table has non-finite entries")
        if np.any(f < 0):
            i, j = np.argwhere(f < 0)[0]
            raise ParameterError(f"joint table entry ({i}, {j}) is negative: {f[i, j]!r}")
        total = f.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ParameterError(f"joint table sums to {total!r}, not 1")
        fx, fy = f.sum(axis=1), f.sum(axis=0)
        if np.any(fx <= 0):
            raise DegenerateInputError(f"row {int(np.argmin(fx))} of the joint table has zero mass")
        if np.any(fy <= 0):
            raise DegenerateInputError(f"column {int(np.argmin(fy))} of the joint table has zero mass")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @property
    def shape(self):
        return self.f.shape

    @property
    def f_x(self) -> np.ndarray:
        return self.f.sum(axis=1)

    @property
    def f_y(self) -> np.ndarray:
        return self.f.sum(axis=0)

    @property
    def y_given_x(self) -> np.ndarray:
        """``[x, y] -> f(y | x)``; rows sum to one. Matrix of the operator P_X."""
        return self.f / self.f_x[:, None]

    @property
    def x_given_y(self) -> np.ndarray:
        """``[y, x] -> f(x | y)``; rows sum to one. Matrix of the operator P_Y."""
        return (self.f / self.f_y[None, :]).T

    @classmethod
    def independent(cls, f_x, f_y):
        return cls(np.outer(f_x, f_y))


def random_table(rng: np.random.Generator, nx: int, ny: int, concentration: float = 1.0) -> JointTable:
    """Dirichlet-distributed joint table with every entry strictly positive."""
    w = rng.gamma(concentration, size=nx * ny) + 1e-3
    f = (w / w.sum()).reshape(nx, ny)
    # renormalise so the sum is 1 to the last bit the validator cares about
    return JointTable(f / f.sum())


@dataclass(frozen=True, eq=False)
class Kernel:
    """Row-stochastic matrix ``P`` reversible with respect to ``pi``."""

    P: np.ndarray
    pi: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        pi = np.array(self.pi, dtype=float)
        n = pi.shape[0]
        if P.shape != (n, n):
            raise ParameterError(f"kernel of shape {P.shape} does not match weights of length {n}")
        if self.check:
            rows = np.abs(P.sum(axis=1) - 1.0)
            if rows.max() > ROW_TOL:
                raise ParameterError(f"row {int(rows.argmax())} of the kernel sums to {P[rows.argmax()].sum()!r}")
            if np.any(P < -ROW_TOL):
                raise ParameterError("kernel has negative transition probabilities")
            gap = self.balance_residual(P, pi)
            if gap > BALANCE_TOL:
                raise ReversibilityError(f"detailed balance violated by {gap:.3e}")
        P.setflags(write=False)
        pi.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "pi", pi)

    @staticmethod
    def balance_residual(P, pi) -> float:
        flow = pi[:, None] * P
        return float(np.max(np.abs(flow - flow.T)))

    @property
    def n(self):
        return self.pi.shape[0]

    def is_idempotent(self, tol=1e-10) -> bool:
        return float(np.max(np.abs(self.P @ self.P - self.P))) < tol


def build_da_kernel(table: JointTable) -> Kernel:
    """Two-step kernel on X: draw y from f(.|x), then x' from f(.|y)."""
    return Kernel(table.y_given_x @ table.x_given_y, table.f_x)


def identity_kernel(weights) -> Kernel:
    weights = np.asarray(weights, dtype=float)
    return Kernel(np.eye(weights.shape[0]), weights)


def projection_kernel(weights) -> Kernel:
    """Kernel whose every row is ``weights``: i.i.d. resampling from the target."""
    weights = np.asarray(weights, dtype=float)
    return Kernel(np.tile(weights, (weights.shape[0], 1)), weights)


def build_sandwich_kernel(table: JointTable, R: Kernel) -> Kernel:
    """Three-step kernel on X with the move ``R`` on Y sandwiched in between."""
    if R.n != table.shape[1]:
        raise ParameterError(f"R acts on {R.n} states but the table has {table.shape[1]} columns")
    gap = float(np.max(np.abs(R.pi - table.f_y)))
    if gap > 1e-8:
        raise ConsistencyError(f"R is stationary for a law that differs from f_Y by {gap:.3e}")
    gap = Kernel.balance_residual(R.P, table.f_y)
    if gap > 1e-8:
        raise ConsistencyError(f"R is not reversible with respect to f_Y (residual {gap:.3e})")
    return Kernel(table.y_given_x @ R.P @ table.x_given_y, table.f_x)


class GroupAction:
    """Finite group acting on ``{0, ..., n-1}`` by permutations.

    ``perms[k]`` is the map ``y -> g_k y``. The counting measure is
    invariant under every permutation, so the multiplier and modular
    function are identically one.
    """

    multiplier = 1.0
    modular = 1.0

    def __init__(self, perms, n_states=None):
        perms = [tuple(int(v) for v in p) for p in perms]
        if not perms:
            raise ParameterError("group action needs at least one element")
        n = len(perms[0]) if n_states is None else int(n_states)
        for k, p in enumerate(perms):
            if len(p) != n or sorted(p) != list(range(n)):
                raise ParameterError(f"element {k} is not a permutation of {n} states: {p}")
        ident = tuple(range(n))
        if ident not in perms:
            perms.insert(0, ident)
        seen = {}
        for p in perms:
            seen.setdefault(p, len(seen))
        perms = list(seen)
        index = {p: k for k, p in enumerate(perms)}
        for p, q in itertools.product(perms, repeat=2):
            comp = tuple(p[q[y]] for y in range(n))
            if comp not in index:
                raise ParameterError(f"permutation set is not closed: {p} o {q} = {comp} is missing")
        self.perms = np.array(perms, dtype=np.intp)
        self.n_states = n
        self.identity = index[ident]

    @classmethod
    def from_generators(cls, n_states, generators):
        """Smallest permutation group containing ``generators``."""
        ident = tuple(range(n_states))
        gens = [tuple(g) for g in generators]
        elems = {ident}
        frontier = [ident]
        while frontier:
            nxt = []
            for p in frontier:
                for g in gens:
                    comp = tuple(g[p[y]] for y in range(n_states))
                    if comp not in elems:
                        elems.add(comp)
                        nxt.append(comp)
            frontier = nxt
        return cls(sorted(elems), n_states)

    @classmethod
    def trivial(cls, n_states):
        return cls([tuple(range(n_states))])

    @classmethod
    def pair_swap(cls, n_states):
        """Z2 swapping 2k <-> 2k+1; a trailing odd state is fixed."""
        g = list(range(n_states))
        for k in range(0, n_states - 1, 2):
            g[k], g[k + 1] = k + 1, k
        return cls.from_generators(n_states, [g])

    @classmethod
    def cyclic(cls, n_states):
        """Z_n rotating all states; a single orbit."""
        return cls.from_generators(n_states, [[(y + 1) % n_states for y in range(n_states)]])

    def __len__(self):
        return self.perms.shape[0]

    def __repr__(self):
        return f"GroupAction(order={len(self)}, n_states={self.n_states})"

    def orbits(self) -> list[list[int]]:
        label = -np.ones(self.n_states, dtype=int)
        out = []
        for y in range(self.n_states):
            if label[y] < 0:
                orb = sorted(set(self.perms[:, y].tolist()))
                label[orb] = len(out)
                out.append(orb)
        return out

    def orbit_labels(self) -> np.ndarray:
        lab = np.empty(self.n_states, dtype=int)
        for k, orb in enumerate(self.orbits()):
            lab[orb] = k
        return lab


def build_group_R(f_y, action: GroupAction) -> Kernel:
    """Middle-step kernel: from y move to g y with probability ∝ f_Y(g y)."""
    f_y = np.asarray(f_y, dtype=float)
    if len(action) == 0:
        raise ParameterError("empty group")
    if action.n_states != f_y.shape[0]:
        raise ParameterError(f"action on {action.n_states} states, weights of length {f_y.shape[0]}")
    n = f_y.shape[0]
    R = np.zeros((n, n))
    rows = np.arange(n)
    for perm in action.perms:
        np.add.at(R, (rows, perm), f_y[perm])
    m = R.sum(axis=1)
    if np.any(m <= 0):
        raise ParameterError(f"orbit of state {int(np.argmin(m))} carries no mass")
    return Kernel(R / m[:, None], f_y)
