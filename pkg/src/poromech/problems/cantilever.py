"""Poroelastic cantilever: unit square clamped on the left, unit downward
traction on top, sealed (no-flow) everywhere.

With zero storage the fluid cannot escape, so small time steps drive the
discretization toward the undrained limit where cell pressures on
quadrilateral meshes develop checkerboard modes; the macro-element pressure
jump stabilization removes them.  All pressure dofs are free (the flow
boundary is pure flux), which the trace block tolerates because it is
always positive definite.
"""

from __future__ import annotations

import numpy as np

from ..assembly import BoundaryConditions, DiscreteSystem, Material, State
from ..mesh import PolyMesh


def default_material() -> Material:
    return Material(shear=3.571e4, lam=1.429e5, alpha=1.0, storage=0.0,
                    kappa=1.0e-7)


def setup(mesh: PolyMesh, dt: float, *, stabilize: bool = False,
          material: Material | None = None, force: float = 1.0,
          linear_solver: str = "direct", rtol: float = 1e-6,
          maxiter: int = 500) -> tuple[DiscreteSystem, State]:
    """Assemble the cantilever and its zero initial state.

    The load enters at the first step, so the initial state is identically
    zero rather than solved for.
    """
    if material is None:
        material = default_material()
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    width, height = hi - lo
    tol = 1e-9 * max(width, height)
    mesh.tag_boundary()
    bcs = BoundaryConditions(
        displacement=[(lambda x: x[0] < lo[0] + tol, (True, True),
                       lambda x, t: (0.0, 0.0))],
        traction=[(lambda x: x[1] > hi[1] - tol,
                   lambda x, t: (0.0, -force / width))])
    system = DiscreteSystem(mesh, material, bcs, dt, stabilize=stabilize,
                            linear_solver=linear_solver, rtol=rtol,
                            maxiter=maxiter)
    state0 = State(time=0.0, u=np.zeros(system.n_u),
                   p=np.zeros(system.n_p), pi=np.zeros(system.n_pi),
                   w=np.zeros(system.velocity_offsets[-1]))
    return system, state0
