"""Mandel's consolidation problem on the quarter domain (0, a) x (0, b).

A poroelastic sample is squeezed between rigid, frictionless, impermeable
platens by a constant force 2F.  Symmetry reduces the strip to a quarter:
rollers on the left and bottom edges, the drained right edge is traction
free at zero pressure, and the platen motion enters as a prescribed
vertical displacement of the top edge taken from the series solution.

The classical series solution is implemented for incompressible
constituents (vanishing storage, unit pressure coupling), the regime whose
early-time pressure rise above the undrained value is strongest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..assembly import BoundaryConditions, DiscreteSystem, Material, State
from ..mesh import PolyMesh


def default_material() -> Material:
    """Stiff sandstone-like benchmark material."""
    return Material(shear=4.167e5, lam=2.778e5, alpha=1.0, storage=0.0,
                    kappa=1.0e-15)


def series_roots(ratio: float, count: int) -> np.ndarray:
    """First roots of tan(x) = ratio * x for ratio > 1.

    The n-th root lies in (n pi, (n + 1/2) pi), n = 0, 1, ...; the bracket
    endpoints are clipped inward to avoid the tangent poles.
    """
    if ratio <= 1.0:
        raise ValueError(f"root equation needs ratio > 1, got {ratio}")
    eps = 1e-9
    roots = np.empty(count)
    for k in range(count):
        lo = k * np.pi + eps
        hi = (k + 0.5) * np.pi - eps
        roots[k] = brentq(lambda x: np.tan(x) - ratio * x, lo, hi,
                          xtol=1e-15, rtol=1e-15)
    return roots


class MandelSolution:
    """Series solution: pressure and displacements on the quarter domain.

    Valid for t > 0; the t -> 0 limits are available in closed form through
    undrained_pressure and undrained_displacement.
    """

    def __init__(self, material: Material, width: float = 1.0,
                 force: float = 2.0e2, n_terms: int = 200):
        if material.storage != 0.0 or material.alpha != 1.0:
            raise ValueError("series solution assumes zero storage and "
                             "unit pressure coupling")
        self.material = material
        self.width = width
        self.force = force
        lam, shear = material.lam, material.shear
        self.nu = lam / (2.0 * (lam + shear))
        self.nu_u = 0.5
        self.skempton = 1.0
        kappa = float(np.asarray(material.kappa).ravel()[0])
        self.consolidation = kappa * (lam + 2.0 * shear)
        self.t_char = width**2 / self.consolidation
        ratio = (1.0 - self.nu) / (self.nu_u - self.nu)
        self.roots = series_roots(ratio, n_terms)
        sin, cos = np.sin(self.roots), np.cos(self.roots)
        denom = self.roots - sin * cos
        self._coef_p = sin / denom
        self._coef_sc = sin * cos / denom
        self._coef_c = cos / denom

    def _decay(self, t: float) -> np.ndarray:
        return np.exp(-self.roots**2 * self.consolidation * t
                      / self.width**2)

    def pressure(self, x, t: float):
        """Pore pressure at horizontal position x and time t > 0."""
        x = np.asarray(x, dtype=float)
        decay = self._coef_p * self._decay(t)
        arg = np.multiply.outer(x, self.roots) / self.width
        scale = (2.0 * self.force * self.skempton * (1.0 + self.nu_u)
                 / (3.0 * self.width))
        return scale * ((np.cos(arg) - np.cos(self.roots)) @ decay)

    def displacement(self, x, y, t: float):
        """Displacement components at (x, y) and time t > 0."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        force, shear, a = self.force, self.material.shear, self.width
        decay = self._decay(t)
        s_sc = self._coef_sc @ decay
        u_x = ((force * self.nu / (2.0 * shear * a)
                - force * self.nu_u / (shear * a) * s_sc) * x
               + force / shear
               * (np.sin(np.multiply.outer(x, self.roots) / a)
                  @ (self._coef_c * decay)))
        u_y = (-force * (1.0 - self.nu) / (2.0 * shear * a)
               + force * (1.0 - self.nu_u) / (shear * a) * s_sc) * y
        return u_x, u_y

    def undrained_pressure(self) -> float:
        """Uniform pressure right after load application."""
        return (self.skempton * (1.0 + self.nu_u) * self.force
                / (3.0 * self.width))

    def undrained_displacement(self, x, y):
        """Displacement right after load application."""
        shear, a = self.material.shear, self.width
        u_x = self.force * self.nu_u / (2.0 * shear * a) * np.asarray(x)
        u_y = (-self.force * (1.0 - self.nu_u) / (2.0 * shear * a)
               * np.asarray(y))
        return u_x, u_y

    def drained_displacement(self, x, y):
        """Displacement after full consolidation."""
        shear, a = self.material.shear, self.width
        u_x = self.force * self.nu / (2.0 * shear * a) * np.asarray(x)
        u_y = (-self.force * (1.0 - self.nu) / (2.0 * shear * a)
               * np.asarray(y))
        return u_x, u_y


def setup(mesh: PolyMesh, dt: float, *, force: float = 2.0e2,
          material: Material | None = None, n_terms: int = 200,
          linear_solver: str = "direct",
          stabilize: bool = False) -> tuple[DiscreteSystem, MandelSolution,
                                            State]:
    """Discrete Mandel problem on a quarter-domain mesh.

    Returns the assembled system, the series solution and the undrained
    initial state.  The mesh must cover (0, a) x (0, b) with the drained
    edge at x = a.
    """
    if material is None:
        material = default_material()
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    if not np.allclose(lo, 0.0, atol=1e-9):
        raise ValueError("quarter-domain mesh must start at the origin")
    width, height = hi
    solution = MandelSolution(material, width=width, force=force,
                              n_terms=n_terms)
    tol = 1e-9 * max(width, height)
    mesh.tag_boundary(pressure=lambda x: x[0] > width - tol)

    def top_displacement(x, t):
        if t <= 0.0:
            u_x, u_y = solution.undrained_displacement(x[0], height)
        else:
            u_x, u_y = solution.displacement(x[0], height, t)
        return (u_x, u_y)

    zero = lambda x, t: (0.0, 0.0)
    bcs = BoundaryConditions(
        displacement=[
            (lambda x: x[0] < tol, (True, False), zero),
            (lambda x: x[1] < tol, (False, True), zero),
            (lambda x: x[1] > height - tol, (False, True),
             top_displacement),
        ],
        pressure=lambda x, t: 0.0)
    system = DiscreteSystem(mesh, material, bcs, dt,
                            linear_solver=linear_solver,
                            stabilize=stabilize)
    state0 = system.initial_state(p0=solution.undrained_pressure(), t0=0.0)
    return system, solution, state0


def profile_cells(mesh: PolyMesh, height: float) -> np.ndarray:
    """Cells whose centroids lie nearest the horizontal midline."""
    dist = np.abs(mesh.cell_centroid[:, 1] - 0.5 * height)
    return np.flatnonzero(dist <= dist.min() + 1e-12)


def exact_cell_means(solution: MandelSolution, system: DiscreteSystem,
                     cells: np.ndarray, t: float) -> np.ndarray:
    """Exact pressure cell means over the given cells at time t."""
    pts, wts, owners = system.quadrature()
    values = solution.pressure(pts[:, 0], t)
    integrals = np.bincount(owners, wts * values,
                            minlength=system.n_p)
    return integrals[cells] / system.mesh.cell_area[cells]


def run_profiles(system: DiscreteSystem, solution: MandelSolution,
                 state0: State, sample_times) -> dict:
    """March in time and collect midline pressure profiles.

    sample_times must be (close to) multiples of the system time step.
    Returns the sampled profiles, the exact profile cell means, and the
    full normalized pressure history at the cell nearest the sealed edge.
    """
    mesh = system.mesh
    height = mesh.vertices[:, 1].max()
    cells = profile_cells(mesh, height)
    order = np.argsort(mesh.cell_centroid[cells, 0])
    cells = cells[order]
    corner = cells[0]
    p0 = solution.undrained_pressure()

    sample_times = np.asarray(sorted(sample_times), dtype=float)
    steps = np.rint(sample_times / system.dt).astype(int)
    if np.any(np.abs(steps * system.dt - sample_times)
              > 1e-8 * sample_times):
        raise ValueError("sample times must be multiples of the time step")
    sampled = set(steps.tolist())

    profiles = []
    history_t = [state0.time]
    history_p = [state0.p[corner] / p0]
    state = state0
    for n in range(1, steps.max() + 1):
        state = system.step(state)
        history_t.append(state.time)
        history_p.append(state.p[corner] / p0)
        if n in sampled:
            profiles.append({
                "time": state.time,
                "cells": cells,
                "x": mesh.cell_centroid[cells, 0].copy(),
                "p": state.p[cells].copy(),
                "p_exact": exact_cell_means(solution, system, cells,
                                            state.time),
                "p_point": solution.pressure(
                    mesh.cell_centroid[cells, 0], state.time),
            })
    return {"profiles": profiles,
            "history_t": np.asarray(history_t),
            "history_p": np.asarray(history_p),
            "p_undrained": p0}
