"""Plane shear study: march a periodic channel with a moving lid to
steady state and watch the velocity profile settle onto the analytic
straight line between the two walls."""

import argparse

import numpy as np

from slbm.core import CollisionParams, omega_from_viscosity
from slbm.dense import DenseEngine
from slbm.geometry import couette_flags
from slbm.stencil import make_stencil


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=32, help="box edge in cells")
    ap.add_argument("--nu", type=float, default=0.1, help="kinematic viscosity")
    ap.add_argument("--u-wall", type=float, default=0.05, help="lid speed")
    ap.add_argument("--max-steps", type=int, default=20000)
    ap.add_argument("--tol", type=float, default=1e-3, help="relative L2 stop")
    ap.add_argument("--check-every", type=int, default=500)
    args = ap.parse_args(argv)

    n = args.size
    flags = couette_flags((n, n), args.u_wall)
    params = CollisionParams(omega=omega_from_viscosity(args.nu))
    eng = DenseEngine(flags, make_stencil("d2q9"), params, pattern="pull")
    eng.init_equilibrium()

    # bounce-back walls sit half a cell outside the first and last rows
    exact = args.u_wall * (np.arange(n) + 0.5) / n
    print(f"{n}x{n} channel, omega={params.omega:.4f}, lid {args.u_wall}")
    print(f"{'step':>8}  {'rel L2 error':>12}")
    steps = 0
    rel = np.inf
    while steps < args.max_steps:
        for _ in range(args.check_every):
            eng.refresh_boundary(eng.parity)
            eng.step()
            eng.finish_step()
        steps += args.check_every
        _, u = eng.macroscopic_fields()
        rel = np.linalg.norm(u[..., 0].mean(axis=1) - exact) / np.linalg.norm(exact)
        print(f"{steps:>8}  {rel:>12.3e}")
        if rel <= args.tol:
            break

    verdict = "converged" if rel <= args.tol else "did not converge"
    print(f"{verdict} to {args.tol:g} after {steps} steps (error {rel:.3e})")
    return 0 if rel <= args.tol else 1


if __name__ == "__main__":
    raise SystemExit(main())
