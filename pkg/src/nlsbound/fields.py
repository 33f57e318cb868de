"""Discretized fields on boxes with obstacle masks.

A field lives on a uniform grid over a box [-H_i, H_i]^N with spacing h.
Dirichlet conditions (outer boundary and obstacle) are enforced by
pinning: masked nodes carry the value 0 and are excluded from the degrees
of freedom.  The gradient energy is the link sum

    |grad u|^2 ~ sum_axis sum_links (u_j - u_i)^2 / h^2 * h^N,

whose variation is exactly the (2N+1)-point Laplacian, so discrete
energies and discrete Euler-Lagrange residuals are consistent to the last
bit.  The barycenter map averages |u| over unit balls, thresholds at half
the maximum and takes the centroid; it is translation-equivariant up to
O(h), which is what the degree argument needs.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.sparse.linalg import LinearOperator, cg

from .scaling import ModelParams

__all__ = [
    "Grid",
    "GridField",
    "EnergyReport",
    "make_grid",
    "field_from_profile",
    "energy",
    "lagrange_multiplier",
    "el_residual",
    "project_mass",
    "barycenter",
    "sign_classify",
    "gn_constant",
    "gn_lower_bound",
    "field_to_bytes",
    "field_from_bytes",
    "centerline_csv",
]


@dataclass
class Grid:
    """Geometry shared by fields: box, spacing, Dirichlet mask."""

    half_widths: tuple
    h: float
    mask: np.ndarray  # True on free nodes
    obstacle_radius: float = 0.0

    _axes: tuple | None = field(default=None, repr=False, compare=False)
    _ball_stencil: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_dim(self) -> int:
        return len(self.half_widths)

    @property
    def shape(self) -> tuple:
        return self.mask.shape

    def axes(self):
        if self._axes is None:
            self._axes = tuple(
                -hw + self.h * np.arange(n)
                for hw, n in zip(self.half_widths, self.shape)
            )
        return self._axes

    def coordinate_mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def radius_sq_mesh(self, center):
        # explicit broadcasting, cheaper than full meshgrid
        out = None
        for i, (ax, c) in enumerate(zip(self.axes(), center)):
            sh = [1] * self.n_dim
            sh[i] = -1
            term = ((ax - c) ** 2).reshape(sh)
            out = term if out is None else out + term
        return out

    def cell_volume(self) -> float:
        return self.h**self.n_dim


def make_grid(half_widths, h: float, obstacle_radius: float = 0.0) -> Grid:
    """Uniform grid with outer Dirichlet layer and a pinned ball at the
    origin of the given radius (0 = whole box free)."""
    half_widths = tuple(float(x) for x in np.atleast_1d(half_widths))
    shape = tuple(int(round(2 * hw / h)) + 1 for hw in half_widths)
    mask = np.ones(shape, dtype=bool)
    for i, n in enumerate(shape):
        sl = [slice(None)] * len(shape)
        sl[i] = 0
        mask[tuple(sl)] = False
        sl[i] = n - 1
        mask[tuple(sl)] = False
    grid = Grid(half_widths=half_widths, h=h, mask=mask, obstacle_radius=obstacle_radius)
    if obstacle_radius > 0.0:
        r2 = grid.radius_sq_mesh(np.zeros(len(shape)))
        grid.mask = mask & (r2 > obstacle_radius**2)
    return grid


@dataclass
class GridField:
    """Values on a Grid; masked nodes always hold exactly zero."""

    grid: Grid
    values: np.ndarray
    params: ModelParams

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        self.values[~self.grid.mask] = 0.0

    def copy(self):
        return GridField(grid=self.grid, values=self.values.copy(), params=self.params)

    def mass_sq(self) -> float:
        return float(np.sum(self.values**2)) * self.grid.cell_volume()

    def inner(self, other: np.ndarray) -> float:
        return float(np.sum(self.values * other)) * self.grid.cell_volume()


@dataclass
class EnergyReport:
    kinetic: float
    potential_term: float
    nonlinear: float
    total: float
    lambda_est: float
    residual_norm: float | None = None


def field_from_profile(grid: Grid, profile, center, params: ModelParams,
                       cutoff=None) -> GridField:
    """Radial profile placed at `center`, optionally multiplied by a
    cutoff function of position, pinned by the grid mask."""
    r = np.sqrt(grid.radius_sq_mesh(np.asarray(center, dtype=float)))
    vals = profile(r)
    if cutoff is not None:
        vals = vals * cutoff(grid)
    return GridField(grid=grid, values=vals, params=params)


def gradient_energy(u: GridField) -> float:
    v = u.values
    h = u.grid.h
    total = 0.0
    for ax in range(v.ndim):
        d = np.diff(v, axis=ax)
        total += float(np.sum(d * d))
    return total * h ** (v.ndim - 2)


def laplacian(u: GridField) -> np.ndarray:
    """(2N+1)-point Laplacian of the zero-extended field; rows of masked
    nodes are zeroed (they are not degrees of freedom)."""
    v = u.values
    h2 = u.grid.h**2
    out = -2.0 * v.ndim * v.copy()
    for ax in range(v.ndim):
        out += np.roll(v, 1, axis=ax) + np.roll(v, -1, axis=ax)
        # np.roll wraps around; the wrapped entries land on masked boundary
        # rows and are discarded below.
    out /= h2
    out[~u.grid.mask] = 0.0
    return out


def energy(u: GridField, potential=None, with_residual: bool = False) -> EnergyReport:
    """Constrained energy split into kinetic, potential and nonlinear parts.

    potential is either None (V = 0) or an array of V on the grid.
    """
    p = u.params.p
    vol = u.grid.cell_volume()
    kin = 0.5 * gradient_energy(u)
    if potential is None:
        pot = 0.0
    else:
        pot = 0.5 * float(np.sum(potential * u.values**2)) * vol
    nonlin = float(np.sum(np.abs(u.values) ** p)) * vol / p
    total = kin + pot - nonlin
    lam = lagrange_multiplier(u, potential)
    rep = EnergyReport(kinetic=kin, potential_term=pot, nonlinear=nonlin,
                       total=total, lambda_est=lam)
    if with_residual:
        _, l2, dual = el_residual(u, potential, lam)
        rep.residual_norm = dual
    return rep


def lagrange_multiplier(u: GridField, potential=None) -> float:
    """Multiplier estimate  lam = (|u|_p^p - |grad u|^2 - int V u^2) / |u|_2^2,
    exact at critical points and continuous everywhere."""
    p = u.params.p
    vol = u.grid.cell_volume()
    pn = float(np.sum(np.abs(u.values) ** p)) * vol
    g2 = gradient_energy(u)
    vterm = 0.0 if potential is None else float(np.sum(potential * u.values**2)) * vol
    m2 = u.mass_sq()
    if m2 == 0.0:
        raise ValueError("multiplier undefined for the zero field")
    return (pn - g2 - vterm) / m2


def el_residual(u: GridField, potential, lam: float):
    """Euler-Lagrange residual field  -Lap u + lam u + V u - |u|^(p-2) u,
    its L2 norm, and an H^(-1)-type dual norm obtained from one Helmholtz
    solve (-Lap + 1)^(-1) on the free nodes."""
    p = u.params.p
    v = u.values
    res = -laplacian(u) + lam * v - np.sign(v) * np.abs(v) ** (p - 1.0)
    if potential is not None:
        res = res + potential * v
    res[~u.grid.mask] = 0.0
    vol = u.grid.cell_volume()
    l2 = math.sqrt(float(np.sum(res**2)) * vol)

    mask = u.grid.mask
    shape = v.shape
    h2 = u.grid.h**2

    def apply_op(x):
        xa = np.zeros(shape)
        xa[mask] = x
        out = (2.0 * xa.ndim / h2 + 1.0) * xa
        for ax in range(xa.ndim):
            out -= (np.roll(xa, 1, axis=ax) + np.roll(xa, -1, axis=ax)) / h2
        return out[mask]

    nfree = int(mask.sum())
    op = LinearOperator((nfree, nfree), matvec=apply_op)
    rhs = res[mask]
    sol, info = cg(op, rhs, rtol=1e-8, atol=0.0, maxiter=2000)
    if info != 0:
        sol, _ = cg(op, rhs, rtol=1e-6, atol=0.0, maxiter=8000)
    dual = math.sqrt(max(float(np.dot(rhs, sol)) * vol, 0.0))
    return res, l2, dual


def project_mass(u: GridField, rho: float) -> GridField:
    nrm = math.sqrt(u.mass_sq())
    if nrm == 0.0:
        raise ValueError("cannot mass-normalise the zero field")
    return GridField(grid=u.grid, values=u.values * (rho / nrm), params=u.params)


def _ball_stencil(grid: Grid, radius: float = 1.0) -> np.ndarray:
    key = (radius, grid.h, grid.n_dim)
    st = grid._ball_stencil.get(key)
    if st is None:
        m = int(math.floor(radius / grid.h + 1e-12))
        ax = grid.h * np.arange(-m, m + 1)
        rr = None
        for i in range(grid.n_dim):
            sh = [1] * grid.n_dim
            sh[i] = -1
            term = (ax**2).reshape(sh)
            rr = term if rr is None else rr + term
        st = (rr <= radius**2).astype(float)
        grid._ball_stencil[key] = st
    return st


def local_average(u: GridField, radius: float = 1.0) -> np.ndarray:
    """mu(u): |u| averaged over balls of the given radius."""
    st = _ball_stencil(u.grid, radius)
    ball_vol = math.pi ** (u.grid.n_dim / 2.0) / math.gamma(u.grid.n_dim / 2.0 + 1.0) * radius**u.grid.n_dim
    conv = fftconvolve(np.abs(u.values), st, mode="same")
    return conv * (u.grid.cell_volume() / ball_vol)


def barycenter(u: GridField, radius: float = 1.0) -> np.ndarray:
    """Centroid of [mu(u) - max mu(u)/2]^+ : finite even for fields that
    merely decay, and shifts by exactly z under translation by z (up to
    grid resolution)."""
    if not np.any(u.values):
        raise ValueError("barycenter undefined for the zero field")
    mu = local_average(u, radius)
    hat = mu - 0.5 * mu.max()
    np.maximum(hat, 0.0, out=hat)
    total = hat.sum()
    out = np.empty(u.grid.n_dim)
    for i, ax in enumerate(u.grid.axes()):
        sh = [1] * u.grid.n_dim
        sh[i] = -1
        out[i] = float((hat * ax.reshape(sh)).sum() / total)
    return out


def sign_classify(u: GridField, noise_floor: float = 1e-8,
                  context: dict | None = None) -> dict:
    """Constant-sign vs sign-changing, ignoring values below
    noise_floor * max |u|.

    With a context dict {'m', 's', 'base_profile', 'potential',
    'residual_tol'} describing the ambient problem, a sign-changing field
    that is near-critical additionally gets the two structural checks:
    its energy must exceed the window top 2^(-s) m, and its mass^2 must
    exceed twice the mass of the one-bump soliton at the same multiplier.
    """
    vmax = float(np.max(np.abs(u.values)))
    if vmax == 0.0:
        return {"classification": "zero", "pos_mass_sq": 0.0, "neg_mass_sq": 0.0}
    thr = noise_floor * vmax
    pos = u.values > thr
    neg = u.values < -thr
    vol = u.grid.cell_volume()
    pos_mass = float(np.sum(u.values[pos] ** 2)) * vol
    neg_mass = float(np.sum(u.values[neg] ** 2)) * vol
    changing = pos.any() and neg.any()
    out = {
        "classification": "sign-changing" if changing else "constant-sign",
        "pos_mass_sq": pos_mass,
        "neg_mass_sq": neg_mass,
        "max": float(u.values.max()),
        "min": float(u.values.min()),
    }
    if changing and context is not None:
        potential = context.get("potential")
        lam = lagrange_multiplier(u, potential)
        _, l2, _ = el_residual(u, potential, lam)
        out["near_critical"] = l2 < context.get("residual_tol", 1e-3)
        if out["near_critical"]:
            top = 2.0 ** (-context["s"]) * context["m"]
            e = energy(u, potential).total
            out["energy_above_top"] = bool(e > top)
            out["energy_margin"] = e - top
            base = context.get("base_profile")
            if base is not None and lam > 0:
                # mass of the one-bump soliton at this multiplier, from the
                # lam-dial exponent of the base family
                ex = 2.0 / (u.params.p - 2.0) - u.grid.n_dim / 2.0
                mass_at_lam = base.mass_sq * (lam / base.lam) ** ex
                out["mass_vs_twice_soliton"] = u.mass_sq() / (2.0 * mass_at_lam)
    return out


def gn_constant(profile) -> float:
    """Sharp interpolation constant calibrated on the soliton:
    C = |w|_p^p / (|w|_2^(p - N(p-2)/2) |grad w|_2^(N(p-2)/2))."""
    n, p = profile.n_dim, profile.p
    theta = n * (p - 2.0) / 2.0
    return profile.p_norm / (
        profile.mass_sq ** ((p - theta) / 2.0) * profile.grad_sq ** (theta / 2.0)
    )


def gn_lower_bound(u: GridField, c_gn: float) -> float:
    """Coercivity bound E(u) >= g/2 - (C/p) rho^(p-theta) g^(theta/2),
    with g = |grad u|^2; finite and bounded below because theta < 2."""
    p = u.params.p
    n = u.grid.n_dim
    theta = n * (p - 2.0) / 2.0
    g = gradient_energy(u)
    rho = math.sqrt(u.mass_sq())
    return 0.5 * g - (c_gn / p) * rho ** (p - theta) * g ** (theta / 2.0)


_MAGIC = b"NLSF1\x00"


def field_to_bytes(u: GridField) -> bytes:
    """Flat binary snapshot: header (dims, h, box, mask run lengths) then
    row-major float64 payload."""
    g = u.grid
    flat_mask = g.mask.ravel()
    # run-length encoding; runs alternate True/False starting with True
    change = np.flatnonzero(flat_mask[1:] != flat_mask[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat_mask.size]))
    runs = np.diff(bounds)
    if not flat_mask[0]:
        runs = np.concatenate(([0], runs))
    runs = [int(x) for x in runs]
    head = bytearray()
    head += _MAGIC
    head += struct.pack("<i", g.n_dim)
    head += struct.pack(f"<{g.n_dim}i", *g.shape)
    head += struct.pack("<d", g.h)
    head += struct.pack(f"<{g.n_dim}d", *g.half_widths)
    head += struct.pack("<d", g.obstacle_radius)
    head += struct.pack("<iddd", u.params.n_dim, u.params.p, u.params.rho, 0.0)
    head += struct.pack("<q", len(runs))
    head += struct.pack(f"<{len(runs)}q", *runs)
    return bytes(head) + u.values.astype("<f8").tobytes(order="C")


def field_from_bytes(buf: bytes) -> GridField:
    if buf[: len(_MAGIC)] != _MAGIC:
        raise ValueError("not a field snapshot")
    off = len(_MAGIC)
    (nd,) = struct.unpack_from("<i", buf, off)
    off += 4
    shape = struct.unpack_from(f"<{nd}i", buf, off)
    off += 4 * nd
    (h,) = struct.unpack_from("<d", buf, off)
    off += 8
    half_widths = struct.unpack_from(f"<{nd}d", buf, off)
    off += 8 * nd
    (obstacle_radius,) = struct.unpack_from("<d", buf, off)
    off += 8
    pn, pp, prho, _ = struct.unpack_from("<iddd", buf, off)
    off += 4 + 24
    (nruns,) = struct.unpack_from("<q", buf, off)
    off += 8
    runs = struct.unpack_from(f"<{nruns}q", buf, off)
    off += 8 * nruns
    flat = np.empty(int(np.prod(shape)), dtype=bool)
    pos = 0
    cur = True
    for rl in runs:
        flat[pos : pos + rl] = cur
        pos += rl
        cur = not cur
    mask = flat.reshape(shape)
    vals = np.frombuffer(buf, dtype="<f8", offset=off).reshape(shape).copy()
    grid = Grid(half_widths=half_widths, h=h, mask=mask, obstacle_radius=obstacle_radius)
    return GridField(grid=grid, values=vals, params=ModelParams(pn, pp, prho))


def centerline_csv(u: GridField, axis: int = 0) -> str:
    """CSV slice of the field along one axis through the box center."""
    idx = [n // 2 for n in u.grid.shape]
    sl = list(idx)
    sl[axis] = slice(None)
    line = u.values[tuple(sl)]
    ax = u.grid.axes()[axis]
    rows = ["x,value"]
    rows += [f"{x:.17g},{v:.17g}" for x, v in zip(ax, line)]
    return "\n".join(rows) + "\n"
