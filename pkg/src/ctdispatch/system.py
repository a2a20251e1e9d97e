"""Generators, lines and the stacked operating-limit inequalities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def _vec(x, n: int, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float).ravel()
    if arr.size != n:
        raise DomainError(f"{name}: expected length {n}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: non-finite entries")
    arr.setflags(write=False)
    return arr


def _mat(x, shape: tuple, name: str) -> np.ndarray:
    arr = np.array(x, dtype=float)
    if arr.size == 0:
        arr = arr.reshape(shape) if 0 in shape else arr
    if arr.shape != shape:
        raise DomainError(f"{name}: expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SystemModel:
    """DC transmission system with ``G`` generators, ``D`` loads, ``L`` lines.

    ``ptdf_gen`` (``L x G``) and ``ptdf_load`` (``L x D``) map generator
    outputs and load demands to line flows, i.e. the load factors already
    carry the withdrawal sign.
    """

    cost: np.ndarray
    x_max: np.ndarray
    x_min: np.ndarray
    ramp_up: np.ndarray
    ramp_down: np.ndarray
    f_max: np.ndarray
    ptdf_gen: np.ndarray
    ptdf_load: np.ndarray
    gen_names: tuple = field(default=())
    line_names: tuple = field(default=())

    def __post_init__(self):
        G = np.size(self.cost)
        L = np.size(self.f_max)
        if G == 0:
            raise DomainError("at least one generator is required")
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("cost", _vec(self.cost, G, "cost"))
        for name in ("x_max", "x_min", "ramp_up", "ramp_down"):
            set_(name, _vec(getattr(self, name), G, name))
        set_("f_max", _vec(self.f_max, L, "f_max"))
        if np.ndim(self.ptdf_load) != 2:
            raise DomainError("ptdf_load must be a 2-D array (use shape (0, D) without lines)")
        D = np.shape(self.ptdf_load)[1]
        set_("ptdf_gen", _mat(self.ptdf_gen, (L, G), "ptdf_gen"))
        set_("ptdf_load", _mat(self.ptdf_load, (L, D), "ptdf_load"))
        if np.any(self.x_min > self.x_max):
            raise DomainError(f"x_min exceeds x_max for generator(s) {np.flatnonzero(self.x_min > self.x_max).tolist()}")
        if np.any(self.f_max < 0):
            raise DomainError("line capacities must be non-negative")
        if np.any(self.cost < 0):
            raise DomainError("generation costs must be non-negative")
        if np.any(self.ramp_up < 0) or np.any(self.ramp_down > 0):
            raise DomainError("ramp_up must be >= 0 and ramp_down <= 0")
        if not self.gen_names:
            set_("gen_names", tuple(f"gen{g + 1}" for g in range(G)))
        if not self.line_names:
            set_("line_names", tuple(f"line{l + 1}" for l in range(L)))
        if len(self.gen_names) != G or len(self.line_names) != L:
            raise DomainError("name lists do not match generator/line counts")

    @classmethod
    def without_lines(cls, cost, x_max, x_min, ramp_up, ramp_down, n_loads: int, **kw):
        G = np.size(cost)
        return cls(cost, x_max, x_min, ramp_up, ramp_down, np.zeros(0),
                   np.zeros((0, G)), np.zeros((0, n_loads)), **kw)

    @property
    def G(self) -> int:
        return int(self.cost.size)

    @property
    def L(self) -> int:
        return int(self.f_max.size)

    @property
    def D(self) -> int:
        return int(self.ptdf_load.shape[1])


@dataclass(frozen=True, eq=False)
class StackedInequalities:
    """``A x + B xi <= a`` with row blocks ``[x <= x_max]``, ``[-x <= -x_min]``,
    ``[flow <= f_max]``, ``[-flow <= f_max]``."""

    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    labels: tuple

    @property
    def rows(self) -> int:
        return int(self.a.size)


def assemble(sys: SystemModel) -> StackedInequalities:
    G, D, L = sys.G, sys.D, sys.L
    eye = np.eye(G)
    A = np.vstack([eye, -eye, sys.ptdf_gen, -sys.ptdf_gen])
    B = np.vstack([np.zeros((G, D)), np.zeros((G, D)), sys.ptdf_load, -sys.ptdf_load])
    a = np.concatenate([sys.x_max, -sys.x_min, sys.f_max, sys.f_max])
    labels = (
        tuple(f"capacity-max {n}" for n in sys.gen_names)
        + tuple(f"capacity-min {n}" for n in sys.gen_names)
        + tuple(f"flow-max {n}" for n in sys.line_names)
        + tuple(f"flow-min {n}" for n in sys.line_names)
    )
    for arr in (A, B, a):
        arr.setflags(write=False)
    return StackedInequalities(A=A, B=B, a=a, labels=labels)
