"""Brute-force numerical verifiers.

Nothing in here imports the analytic modules: the oracles only share
potential evaluators with the code they check.

* ``fd_spectrum`` / ``fd_spectrum_2d``: finite-difference Schroedinger
  eigensolvers (three-point stencil, Dirichlet walls).
* ``lattice_kernel``: the time-sliced Euclidean path integral, evaluated by
  repeated grid convolution.
* ``convolve_kernels``: trapezoid composition of two kernels.
* ``quadrature``: adaptive Gauss-Kronrod (7/15) integration.
* ``brute_modes``: roots of ``det(K - s A)`` by scanning and bisection.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal
from scipy.optimize import brentq, minimize_scalar
from scipy.signal import fftconvolve
from scipy.sparse.linalg import eigsh

from .errors import MemoryGuard, NoConvergence

__all__ = [
    "Grid",
    "Grid1D",
    "Grid2D",
    "LatticeSpec",
    "fd_spectrum",
    "fd_count_below",
    "fd_spectrum_2d",
    "lattice_kernel",
    "free_kernel_stencil",
    "convolve_kernels",
    "quadrature",
    "brute_modes",
    "modes_upper_bound",
    "MAX_GRID_POINTS",
]

MAX_GRID_POINTS = 2 ** 24


class SupportWarning(UserWarning):
    """The grid cuts off a non-negligible part of a kernel."""


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid including both end points on every axis."""

    lo: tuple
    hi: tuple
    n_points: tuple

    def __post_init__(self):
        if not (len(self.lo) == len(self.hi) == len(self.n_points)):
            raise ValueError("lo, hi and n_points must have the same length")
        for lo, hi, n in zip(self.lo, self.hi, self.n_points):
            if not hi > lo:
                raise ValueError(f"grid needs hi > lo (got {lo}, {hi})")
            if n < 8:
                raise ValueError(f"grid needs at least 8 points per axis (got {n})")
        if int(np.prod(self.n_points)) * self.dim > MAX_GRID_POINTS:
            raise MemoryGuard(f"grid of {self.n_points} exceeds {MAX_GRID_POINTS} points")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def spacing(self) -> tuple:
        return tuple((h - l) / (n - 1) for l, h, n in zip(self.lo, self.hi, self.n_points))

    @property
    def cell(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, n) for l, h, n in zip(self.lo, self.hi, self.n_points)]

    def points(self) -> np.ndarray:
        """All grid points, shape ``n_points + (dim,)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def refined(self) -> "Grid":
        """Same box with the spacing halved (old points are a subset)."""
        return Grid(self.lo, self.hi, tuple(2 * n - 1 for n in self.n_points))


def Grid1D(lo: float, hi: float, n_points: int) -> Grid:
    return Grid((float(lo),), (float(hi),), (int(n_points),))


def Grid2D(lo: Sequence[float], hi: Sequence[float], n_points: Sequence[int]) -> Grid:
    if np.ndim(n_points) == 0:
        n_points = (int(n_points), int(n_points))
    return Grid(tuple(map(float, lo)), tuple(map(float, hi)), tuple(map(int, n_points)))


@dataclass(frozen=True)
class LatticeSpec:
    n_slices: int
    T: float
    regime: str = "imaginary"

    def __post_init__(self):
        if self.n_slices < 1:
            raise ValueError("n_slices must be >= 1")
        if not self.T > 0:
            raise ValueError("T must be > 0")
        if self.regime != "imaginary":
            raise ValueError("the lattice oracle only runs in imaginary time")

    @property
    def eps(self) -> float:
        return self.T / self.n_slices


# ---------------------------------------------------------------------------
# 1D finite differences


def _as_grid1d(grid) -> Grid:
    if isinstance(grid, Grid):
        if grid.dim != 1:
            raise ValueError("expected a one-dimensional grid")
        return grid
    lo, hi, n = grid
    return Grid1D(lo, hi, n)


def _fd_tridiag(mass, V, grid: Grid, hbar):
    x = grid.axes()[0][1:-1]
    h = grid.spacing[0]
    t = hbar ** 2 / (2.0 * mass * h * h)
    v = np.asarray(V(x), dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("potential is not finite on the grid")
    return x, 2.0 * t + v, np.full(x.size - 1, -t), h


def _fd_solve(mass, V, grid, n_levels, hbar):
    x, diag, off, h = _fd_tridiag(mass, V, grid, hbar)
    try:
        w, vec = eigh_tridiagonal(diag, off, select="i", select_range=(0, n_levels - 1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    return w, x, vec.T / math.sqrt(h)


def fd_spectrum(mass: float, V: Callable, grid, n_levels: int, hbar: float = 1.0,
                extrapolate: bool = False):
    """Lowest eigenpairs of ``-(hbar^2/2m) psi'' + V psi`` with ``psi = 0`` at the walls.

    Parameters
    ----------
    mass : float
    V : callable
        Vectorized potential.
    grid : Grid or (lo, hi, n_points)
        Includes the two wall points, which are not unknowns.
    n_levels : int
        Must stay below a quarter of the grid size.
    extrapolate : bool
        Also solve on the grid with halved spacing and Richardson-combine the
        energies, ``(4 E_{h/2} - E_h) / 3``.  Eigenvectors are those of the
        finer grid.

    Returns
    -------
    energies : (n_levels,) ndarray
    x : ndarray
        Interior grid points.
    vectors : (n_levels, len(x)) ndarray
        Normalized so that ``sum(v**2) * h == 1``.
    """
    grid = _as_grid1d(grid)
    if not mass > 0:
        raise ValueError("mass must be > 0")
    if not 0 < n_levels < grid.n_points[0] / 4:
        raise ValueError("n_levels must be positive and below n_points/4")
    w, x, vec = _fd_solve(mass, V, grid, n_levels, hbar)
    if not extrapolate:
        return w, x, vec
    wf, xf, vf = _fd_solve(mass, V, grid.refined(), n_levels, hbar)
    return (4.0 * wf - w) / 3.0, xf, vf


def fd_count_below(mass: float, V: Callable, grid, E_cut: float, hbar: float = 1.0) -> int:
    """Number of FD eigenvalues strictly below ``E_cut``."""
    grid = _as_grid1d(grid)
    x, diag, off, _ = _fd_tridiag(mass, V, grid, hbar)
    lower = float(diag.min() - 2.0 * abs(off[0]) - 1.0)
    if E_cut <= lower:
        return 0
    w = eigvalsh_tridiagonal(diag, off, select="v", select_range=(lower, E_cut))
    return int(np.count_nonzero(w < E_cut))


# ---------------------------------------------------------------------------
# 2D finite differences


def _second_diff(n, h):
    main = np.full(n, -2.0)
    side = np.ones(n - 1)
    return sp.diags([side, main, side], [-1, 0, 1]) / (h * h)


def _first_diff(n, h):
    side = np.ones(n - 1) / (2.0 * h)
    return sp.diags([-side, side], [-1, 1])


def _fd2d_solve(inv_mass, V, grid: Grid, n_levels, hbar):
    (xa, ya) = [ax[1:-1] for ax in grid.axes()]
    hx, hy = grid.spacing
    nx, ny = xa.size, ya.size
    G = np.asarray(inv_mass, dtype=float)
    Ix, Iy = sp.identity(nx), sp.identity(ny)
    lap = (G[0, 0] * sp.kron(_second_diff(nx, hx), Iy)
           + (G[0, 1] + G[1, 0]) * sp.kron(_first_diff(nx, hx), _first_diff(ny, hy))
           + G[1, 1] * sp.kron(Ix, _second_diff(ny, hy)))
    X, Y = np.meshgrid(xa, ya, indexing="ij")
    pts = np.stack([X, Y], axis=-1)
    v = np.asarray(V(pts), dtype=float).reshape(nx * ny)
    H = (-0.5 * hbar ** 2) * lap + sp.diags(v)
    H = H.tocsc()
    shift = float(v.min()) - 1e-3 * (1.0 + abs(float(v.min())))
    w, vec = eigsh(H, k=n_levels, sigma=shift, which="LM", tol=1e-13)
    order = np.argsort(w)
    w = w[order]
    vec = vec[:, order].T.reshape(n_levels, nx, ny) / math.sqrt(hx * hy)
    return w, (xa, ya), vec


def fd_spectrum_2d(inv_mass, V: Callable, grid: Grid, n_levels: int, hbar: float = 1.0,
                   extrapolate: bool = False):
    """Lowest eigenpairs of ``1/2 p.G.p + V`` on a 2D Dirichlet grid.

    ``G`` is the (constant, symmetric positive-definite) inverse mass matrix,
    so the kinetic operator is ``-(hbar^2/2) sum_ij G_ij d_i d_j``.  The mixed
    derivative uses the four-corner central stencil, second order like the
    pure second differences.

    ``V`` receives points of shape ``(nx, ny, 2)``.  Returns energies, the
    interior axes and eigenvectors of shape ``(n_levels, nx, ny)`` normalized
    with the cell area.  ``extrapolate`` Richardson-combines energies from the
    grid and its refinement (vectors from the refined grid).
    """
    G = np.asarray(inv_mass, dtype=float)
    if G.shape != (2, 2) or not np.allclose(G, G.T, atol=1e-12):
        raise ValueError("inverse mass matrix must be symmetric 2x2")
    if np.any(np.linalg.eigvalsh(G) <= 0):
        raise ValueError("inverse mass matrix must be positive definite")
    if grid.dim != 2:
        raise ValueError("expected a two-dimensional grid")
    w, axes, vec = _fd2d_solve(G, V, grid, n_levels, hbar)
    if not extrapolate:
        return w, axes, vec
    wf, axf, vf = _fd2d_solve(G, V, grid.refined(), n_levels, hbar)
    return (4.0 * wf - w) / 3.0, axf, vf


# ---------------------------------------------------------------------------
# lattice path integral


def _quadratic_potential(Kmat):
    Kmat = np.asarray(Kmat, dtype=float)

    def V(pts):
        return 0.5 * np.einsum("...i,ij,...j->...", pts, Kmat, pts)
    return V


def free_kernel_stencil(A, eps: float, grid: Grid, hbar: float = 1.0, cut: float = 9.0):
    """Euclidean free short-time kernel sampled on grid offsets (times the cell volume).

    ``g(d) = sqrt(det A) (2 pi hbar eps)^(-n/2) exp(-d.A.d / (2 hbar eps))``
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    h = np.asarray(grid.spacing)
    var = hbar * eps * np.diag(np.linalg.inv(A))
    m = np.ceil(cut * np.sqrt(var) / h).astype(int)
    offs = [np.arange(-mi, mi + 1) * hi for mi, hi in zip(m, h)]
    d = np.stack(np.meshgrid(*offs, indexing="ij"), axis=-1)
    quad = np.einsum("...i,ij,...j->...", d, A, d)
    norm = math.sqrt(np.linalg.det(A)) * (2.0 * math.pi * hbar * eps) ** (-n / 2.0)
    return norm * np.exp(-quad / (2.0 * hbar * eps)) * grid.cell


def _boundary_mass(arr) -> float:
    edge = 0.0
    for ax in range(arr.ndim):
        edge = max(edge, float(np.abs(np.take(arr, [0, -1], axis=ax)).max()))
    peak = float(np.abs(arr).max())
    return edge / peak if peak > 0 else 0.0


def _lattice_once(A, V, n_slices, tau, grid: Grid, phi2, phi1, hbar):
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    eps = tau / n_slices
    norm = math.sqrt(np.linalg.det(A)) * (2.0 * math.pi * hbar * eps) ** (-n / 2.0)
    phi1 = np.asarray(phi1, dtype=float)
    phi2 = np.asarray(phi2, dtype=float)

    def short(pa, pb):
        d = pa - pb
        quad = np.einsum("...i,ij,...j->...", d, A, d)
        return norm * np.exp(-quad / (2 * hbar * eps) - eps * (V(pa) + V(pb)) / (2 * hbar))

    if n_slices == 1:
        return float(short(phi2, phi1))
    pts = grid.points()
    half = np.exp(-eps * V(pts) / (2 * hbar))
    stencil = free_kernel_stencil(A, eps, grid, hbar)
    v = short(pts, phi1)
    for _ in range(n_slices - 2):
        v = half * fftconvolve(half * v, stencil, mode="same")
    if _boundary_mass(v) > 1e-8:
        warnings.warn("lattice kernel support reaches the grid boundary", SupportWarning, stacklevel=3)
    return float(np.sum(short(phi2, pts) * v) * grid.cell)


def lattice_kernel(A, Kmat, spec: LatticeSpec, grid: Grid, phi2, phi1, hbar: float = 1.0,
                   potential: Callable | None = None, extrapolate: bool = True) -> float:
    """Time-sliced Euclidean propagator ``K(phi2, phi1; tau)`` for ``L = 1/2 qdot.A.qdot - V``.

    Each slice uses the short-time kernel

        sqrt(det A) (2 pi hbar eps)^(-n/2)
            * exp(-[d.A.d / (2 eps) + eps (V(a) + V(b)) / 2] / hbar),   d = a - b,

    (the potential split symmetrically over the two ends), and the
    ``n_slices - 1`` intermediate integrals are done on ``grid`` by FFT
    convolution with the exact free stencil.  ``V`` defaults to
    ``1/2 phi.K.phi``.  With ``extrapolate`` the result is Richardson-combined
    with the ``n_slices/2`` lattice, cancelling the ``O(eps^2)`` Trotter error.
    """
    A = np.asarray(A, dtype=float)
    if grid.dim != A.shape[0]:
        raise ValueError("grid dimension does not match the matrices")
    V = potential if potential is not None else _quadratic_potential(Kmat)
    k_n = _lattice_once(A, V, spec.n_slices, spec.T, grid, phi2, phi1, hbar)
    if not extrapolate:
        return k_n
    if spec.n_slices % 2:
        raise ValueError("Richardson extrapolation needs an even number of slices")
    k_half = _lattice_once(A, V, spec.n_slices // 2, spec.T, grid, phi2, phi1, hbar)
    return (4.0 * k_n - k_half) / 3.0


def convolve_kernels(k_left: Callable, k_right: Callable, grid: Grid) -> Callable:
    """Trapezoid composition ``(phi2, phi1) -> sum_g k_left(phi2, g) k_right(g, phi1) dV``.

    Kernel evaluators take ``(phi_final, phi_initial)`` and broadcast over
    leading axes; ``grid`` should cover the support of the integrand.
    """
    pts = grid.points()

    def composed(phi2, phi1):
        left = k_left(np.asarray(phi2, dtype=float), pts)
        right = k_right(pts, np.asarray(phi1, dtype=float))
        integrand = left * right
        if _boundary_mass(np.abs(integrand)) > 1e-8:
            warnings.warn("kernel composition support reaches the grid boundary", SupportWarning,
                          stacklevel=2)
        return np.sum(integrand) * grid.cell
    return composed


# ---------------------------------------------------------------------------
# adaptive quadrature

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_W15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_W7 = np.zeros(15)
_W7[[1, 3, 5]] = _WG[:3]
_W7[[13, 11, 9]] = _WG[:3]
_W7[7] = _WG[3]


def quadrature(f: Callable, lo: float, hi: float, abs_tol: float = 1e-10, max_depth: int = 60,
               n_initial: int = 32, full_output: bool = False):
    """Adaptive Gauss-Kronrod 7/15 integration of a vectorized ``f`` over ``[lo, hi]``.

    The interval is first cut into ``n_initial`` equal pieces so that narrow
    features are not stepped over.  A piece is accepted when ``|K15 - G7|``
    is below its share of ``abs_tol`` (proportional to its length); otherwise
    it is bisected.

    Raises
    ------
    NoConvergence
        If an interval has to be split more than ``max_depth`` times.
    """
    if not abs_tol > 1e-14:
        raise ValueError("abs_tol must exceed 1e-14")
    total_len = hi - lo
    if total_len == 0:
        return (0.0, 0.0) if full_output else 0.0
    edges = np.linspace(lo, hi, n_initial + 1)
    stack = [(edges[i], edges[i + 1], 0) for i in range(n_initial - 1, -1, -1)]
    value = 0.0
    err_sum = 0.0
    while stack:
        a, b, depth = stack.pop()
        c = 0.5 * (a + b)
        r = 0.5 * (b - a)
        fx = np.asarray(f(c + r * _NODES), dtype=float)
        k15 = r * np.dot(_W15, fx)
        g7 = r * np.dot(_W7, fx)
        err = abs(k15 - g7)
        if err <= abs_tol * abs(b - a) / abs(total_len) or err <= 50 * np.finfo(float).eps * abs(k15):
            value += k15
            err_sum += err
            continue
        if depth >= max_depth:
            raise NoConvergence(f"quadrature exceeded max depth on [{a}, {b}]")
        stack.append((c, b, depth + 1))
        stack.append((a, c, depth + 1))
    return (value, err_sum) if full_output else value


# ---------------------------------------------------------------------------
# brute-force mode finder


def modes_upper_bound(A, Kmat) -> float:
    """Upper bound for the roots of ``det(K - s A)`` when ``K`` is positive semidefinite.

    Uses ``sum_k s_k = tr(A^-1 K)``, padded by one percent.
    """
    tr = float(np.trace(np.linalg.solve(np.asarray(A, float), np.asarray(Kmat, float))))
    return 1.01 * tr + 1e-12


def brute_modes(A, Kmat, omega2_max: float, n_scan: int = 2000, max_refine: int = 4,
                tol: float = 1e-13):
    """All roots of ``s -> det(K - s A)`` in ``[0, omega2_max]``, repeated by multiplicity.

    Sign changes on a uniform scan are bisected; touching zeros of even
    multiplicity are located by minimizing the smallest singular value of
    ``K - s A`` around local minima of ``|det|``.  The multiplicity of each
    root is reported as the nullity of ``K - s A``.  If fewer than ``n`` roots
    turn up, the scan is refined up to ``max_refine`` times.

    Returns
    -------
    roots : ndarray
        Ascending, each root repeated according to its multiplicity.
    multiplicities : list of (root, multiplicity)
    """
    A = np.asarray(A, dtype=float)
    Kmat = np.asarray(Kmat, dtype=float)
    n = A.shape[0]
    scale = max(np.abs(Kmat).max(), np.abs(A).max() * omega2_max, 1e-300)

    def det(s):
        return np.linalg.det(Kmat - s * A)

    def sigma_min(s):
        return np.linalg.svd(Kmat - s * A, compute_uv=False)[-1]

    def nullity(s):
        sv = np.linalg.svd(Kmat - s * A, compute_uv=False)
        return int(np.count_nonzero(sv < 1e-8 * scale))

    for f0, where in ((det(0.0), 0.0), (det(omega2_max), omega2_max)):
        if abs(f0) < 1e-12 * scale ** n:
            warnings.warn(f"root at scan boundary s={where}", RuntimeWarning, stacklevel=2)

    found: list[tuple[float, int]] = []
    for _ in range(max_refine + 1):
        s = np.linspace(0.0, omega2_max, n_scan + 1)
        f = np.array([det(si) for si in s])
        roots = []
        for i in range(n_scan):
            if f[i] == 0.0:
                roots.append(s[i])
            elif f[i] * f[i + 1] < 0:
                roots.append(brentq(det, s[i], s[i + 1], xtol=tol, rtol=4 * np.finfo(float).eps,
                                    maxiter=500))
        af = np.abs(f)
        for i in range(1, n_scan):
            if af[i] <= af[i - 1] and af[i] <= af[i + 1] and f[i - 1] * f[i + 1] > 0 and f[i] != 0:
                res = minimize_scalar(sigma_min, bounds=(s[i - 1], s[i + 1]), method="bounded",
                                      options={"xatol": tol})
                if sigma_min(res.x) < 1e-8 * scale:
                    roots.append(float(res.x))
        roots.sort()
        merged: list[float] = []
        for r in roots:
            if not merged or abs(r - merged[-1]) > 1e-9 * max(1.0, abs(r)):
                merged.append(r)
        found = [(r, max(1, nullity(r))) for r in merged]
        if sum(m for _, m in found) >= n:
            break
        n_scan *= 4
    out = np.array([r for r, m in found for _ in range(m)])
    if out.size < n:
        warnings.warn(f"brute_modes found {out.size} of {n} roots in [0, {omega2_max}]",
                      RuntimeWarning, stacklevel=2)
    return out, found
