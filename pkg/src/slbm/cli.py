"""Command-line entry point.

Subcommands: run (one simulation), sweep-porosity (layout benchmark
over a porosity list), info (analytic model report), convert (geometry
artifacts).  Options come from flags or a plain ``key = value`` config
file; flags win.  Every error path exits nonzero after printing a
single ``error[<code>]:`` line, with 2 for usage, 3 for configuration,
4 for runtime failures such as instability, and 5 for I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from time import perf_counter

import numpy as np

from . import geometry, model, output
from .core import CollisionParams, omega_from_viscosity
from .domain import Domain
from .errors import (
    ConfigurationError,
    EmptyBlockError,
    FormatError,
    NumericalInstabilityError,
    ProtocolError,
    SlbmError,
    UnreachablePorosityError,
)
from .stencil import make_stencil

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_RUNTIME = 4
EXIT_IO = 5


class UsageError(SlbmError):
    pass


@dataclass
class RunConfig:
    geometry: str = "channel"
    dims: str = ""
    block_size: str = ""
    policy: str = "sparse"
    pattern: str = "pull"
    overlap: str = "off"
    frame_width: int = 1
    stencil: str = "D2Q9"
    omega: float | None = None
    nu: float | None = None
    steps: int = 100
    workers: int = 1
    seed: int = 0
    porosity: float = 0.7
    u_wall: float = 0.05
    diameter: float = 0.0
    out: str = "out"
    vtk: str = "off"
    run_id: str = "run"

    def apply(self, key: str, value: str) -> None:
        for f in fields(self):
            if f.name == key.replace("-", "_"):
                if f.type in ("int", int):
                    setattr(self, f.name, int(value))
                elif f.type in ("float | None",):
                    setattr(self, f.name, float(value))
                elif f.type in ("float", float):
                    setattr(self, f.name, float(value))
                else:
                    setattr(self, f.name, value)
                return
        raise ConfigurationError(f"unknown config key {key!r}")


def load_config_file(path: str) -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def _parse_ints(text: str, what: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(p) for p in text.replace("x", ",").split(",") if p)
    except ValueError as e:
        raise ConfigurationError(f"bad {what} {text!r}") from e
    if not vals:
        raise ConfigurationError(f"empty {what}")
    return vals


def _parse_policy(text: str) -> tuple[str, float]:
    if text.startswith("hybrid"):
        _, _, arg = text.partition(":")
        return "hybrid", float(arg) if arg else 0.8
    if text in ("sparse", "dense"):
        return text, 0.8
    raise ConfigurationError(
        f"layout policy must be sparse, dense, or hybrid[:phi], got {text!r}"
    )


def _default_dims(cfg: RunConfig, dim: int) -> tuple[int, ...]:
    if cfg.dims:
        dims = _parse_ints(cfg.dims, "dims")
        if len(dims) != dim:
            raise ConfigurationError(f"dims {dims} need {dim} axes for {cfg.stencil}")
        return dims
    return (64, 32) if dim == 2 else (32, 32, 32)


def build_flags(cfg: RunConfig, dims: tuple[int, ...], block_size):
    if cfg.geometry == "channel":
        return geometry.channel_flags(dims)
    if cfg.geometry == "couette":
        return geometry.couette_flags(dims, cfg.u_wall)
    if cfg.geometry == "bed":
        extent = tuple(float(d) for d in dims)
        diameter = cfg.diameter or min(extent) / 8.0
        pack = geometry.generate_particle_bed(
            extent, diameter, cfg.seed, target_porosity=cfg.porosity
        )
        return geometry.mask_flags(geometry.voxelize(pack))
    if cfg.geometry == "riverbed":
        return geometry.riverbed_flags(
            dims, block_size, bed_porosity=cfg.porosity if cfg.porosity < 1 else 0.35,
            seed=cfg.seed, lid_speed=cfg.u_wall,
        )
    path = Path(cfg.geometry)
    if path.suffix or path.exists():
        return geometry.mask_flags(geometry.read_voxel_mask(path))
    raise ConfigurationError(
        f"geometry must be channel|couette|bed|riverbed or a mask path, "
        f"got {cfg.geometry!r}"
    )


def _collision_params(cfg: RunConfig) -> CollisionParams:
    if cfg.omega is not None and cfg.nu is not None:
        raise ConfigurationError("give omega or nu, not both")
    if cfg.omega is not None:
        return CollisionParams(omega=cfg.omega)
    return CollisionParams(omega=omega_from_viscosity(cfg.nu if cfg.nu else 0.1))


def build_domain(cfg: RunConfig) -> Domain:
    st = make_stencil(cfg.stencil)
    dims = _default_dims(cfg, st.dim)
    if cfg.block_size:
        bs = _parse_ints(cfg.block_size, "block size")
        block_size = bs if len(bs) > 1 else bs[0]
    else:
        block_size = dims
    if isinstance(block_size, int):
        block_size = (block_size,) * st.dim
    policy, phi_s = _parse_policy(cfg.policy)
    if cfg.overlap not in ("on", "off"):
        raise ConfigurationError(f"overlap must be on or off, got {cfg.overlap!r}")
    flags = build_flags(cfg, dims, block_size)
    if len(flags.dims) != st.dim:
        raise ConfigurationError(
            f"geometry {cfg.geometry!r} has {len(flags.dims)} axes but "
            f"stencil {cfg.stencil} works on {st.dim}"
        )
    return Domain(
        flags,
        block_size,
        st,
        _collision_params(cfg),
        pattern=cfg.pattern,
        policy=policy,
        phi_s=phi_s,
        frame_width=cfg.frame_width if cfg.overlap == "on" else None,
    )


def _run_record(cfg: RunConfig, dom: Domain, elapsed: float) -> dict:
    c = dom.counters()
    updates = dom.total_fluid() * dom.steps_done
    pdf_el = sum(b.engine.pdf_element_count() for b in dom.blocks.values())
    idx_el = sum(b.engine.idx_element_count() for b in dom.blocks.values())
    n_cells = int(np.prod(dom.global_dims))
    return {
        "run_id": cfg.run_id,
        "geometry": cfg.geometry,
        "stencil": cfg.stencil,
        "layout": cfg.policy,
        "pattern": cfg.pattern,
        "driver": "overlapped" if cfg.overlap == "on" else "sequential",
        "block_size": "x".join(str(s) for s in dom.block_size),
        "porosity": dom.total_fluid() / n_cells,
        "blocks": len(dom.blocks),
        "cells": n_cells,
        "fluid_cells": dom.total_fluid(),
        "steps": dom.steps_done,
        "workers": cfg.workers,
        "seed": cfg.seed,
        "cells_visited": c.cells_visited,
        "pdf_accesses": c.pdf_accesses,
        "idx_reads": c.idx_reads,
        "values_exchanged": c.values_exchanged,
        "messages": c.messages,
        "pdf_elements": pdf_el,
        "idx_elements": idx_el,
        "model_bytes_per_update": dom.model_bytes_per_update(),
        "elapsed_s": elapsed,
        "updates_per_s": updates / elapsed if elapsed > 0 and updates else 0.0,
    }


def cmd_run(cfg: RunConfig) -> int:
    dom = build_domain(cfg)
    dom.init_equilibrium()
    if cfg.workers > 1:
        dom.balance(cfg.workers)
        loads = dom.worker_loads(dom.assignment, cfg.workers)
        print(f"balanced {len(dom.blocks)} blocks over {cfg.workers} workers, "
              f"load stddev {np.std(loads):.3g}")
    driver = "overlapped" if cfg.overlap == "on" else "sequential"
    t0 = perf_counter()
    dom.run(cfg.steps, driver=driver)
    elapsed = perf_counter() - t0
    rec = _run_record(cfg, dom, elapsed)
    out_dir = Path(cfg.out)
    output.write_csv_records([rec], out_dir / f"{cfg.run_id}.csv")
    if cfg.vtk == "on":
        output.write_vtk(dom, out_dir / cfg.run_id)
    c = dom.counters()
    print(f"{rec['fluid_cells']} fluid cells in {rec['blocks']} blocks, "
          f"{rec['steps']} steps, {rec['updates_per_s']:.3e} fluid updates/s")
    print(f"counters: visited={c.cells_visited} pdf={c.pdf_accesses} "
          f"idx={c.idx_reads} exchanged={c.values_exchanged} msgs={c.messages}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, phis: list[float]) -> int:
    st = make_stencil(cfg.stencil)
    dims = _default_dims(cfg, st.dim)
    records = []
    for phi in phis:
        flags = geometry.obstacle_flags(dims, phi, cfg.seed)
        for policy in ("sparse", "dense", "hybrid"):
            dom = Domain(
                flags, dims, st, _collision_params(cfg),
                pattern=cfg.pattern, policy=policy,
            )
            dom.init_equilibrium()
            t0 = perf_counter()
            dom.run(cfg.steps)
            elapsed = perf_counter() - t0
            sub = RunConfig(**{**cfg.__dict__})
            sub.policy = policy
            sub.geometry = "obstacles"
            sub.run_id = f"sweep-{policy}-phi{phi:g}"
            records.append(_run_record(sub, dom, elapsed))
            print(f"phi={phi:g} {policy:7s} {records[-1]['updates_per_s']:.3e} updates/s")
    output.write_csv_records(records, Path(cfg.out) / "sweep.csv")
    return EXIT_OK


def cmd_info(args) -> int:
    print(model.info_report(args.q, args.b_pdf, args.b_idx, args.bandwidth))
    return EXIT_OK


def cmd_convert(args, cfg: RunConfig) -> int:
    if args.what == "bed":
        extent = tuple(float(v) for v in _parse_ints(args.extent, "extent"))
        diameter = args.diameter or min(extent) / 8.0
        pack = geometry.generate_particle_bed(
            extent, diameter, cfg.seed, target_porosity=args.porosity
        )
        mask = geometry.voxelize(pack)
        geometry.write_voxel_mask(args.out_path, mask)
        print(f"wrote {args.out_path}: {pack.count} spheres, "
              f"porosity {mask.porosity():.4f}")
        return EXIT_OK
    if args.what == "preview":
        mask = geometry.read_voxel_mask(args.mask)
        path = output.write_mask_vtk(mask, args.out_path)
        print(f"wrote {path}: dims {mask.dims}, porosity {mask.porosity():.4f}")
        return EXIT_OK
    raise UsageError(f"unknown convert mode {args.what!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def make_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file applied before flags")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)
    common.add_argument("--out", help="output directory")

    p = _Parser(prog="slbm", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one simulation", parents=[common])
    for name in ("geometry", "dims", "block-size", "policy", "pattern",
                 "overlap", "stencil", "vtk", "run-id"):
        run.add_argument(f"--{name}")
    run.add_argument("--frame-width", type=int)
    run.add_argument("--omega", type=float)
    run.add_argument("--nu", type=float)
    run.add_argument("--steps", type=int)
    run.add_argument("--porosity", type=float)
    run.add_argument("--u-wall", type=float)
    run.add_argument("--diameter", type=float)

    sweep = sub.add_parser("sweep-porosity", help="benchmark layouts over porosities",
                           parents=[common])
    sweep.add_argument("--phis", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")
    sweep.add_argument("--dims")
    sweep.add_argument("--stencil")
    sweep.add_argument("--pattern")
    sweep.add_argument("--steps", type=int)
    sweep.add_argument("--omega", type=float)
    sweep.add_argument("--nu", type=float)

    info = sub.add_parser("info", help="print the analytic model report",
                          parents=[common])
    info.add_argument("--q", type=int, default=19)
    info.add_argument("--b-pdf", type=int, default=model.B_PDF)
    info.add_argument("--b-idx", type=int, default=model.B_IDX)
    info.add_argument("--bandwidth", type=float, default=None)

    conv = sub.add_parser("convert", help="geometry artifact conversion",
                          parents=[common])
    conv.add_argument("what", choices=["bed", "preview"])
    conv.add_argument("--extent")
    conv.add_argument("--diameter", type=float, default=0.0)
    conv.add_argument("--porosity", type=float, default=0.7)
    conv.add_argument("--mask")
    conv.add_argument("--out-path", default="mask.svx")
    return p


def _config_from(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        for key, value in load_config_file(args.config):
            cfg.apply(key, value)
    for key in ("geometry", "dims", "block_size", "policy", "pattern", "overlap",
                "frame_width", "stencil", "omega", "nu", "steps", "workers",
                "seed", "porosity", "u_wall", "diameter", "out", "vtk", "run_id"):
        val = getattr(args, key, None)
        if val is not None:
            cfg.apply(key, str(val))
    return cfg


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "info":
            return cmd_info(args)
        cfg = _config_from(args)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "sweep-porosity":
            phis = [float(x) for x in args.phis.split(",") if x]
            return cmd_sweep(cfg, phis)
        if args.command == "convert":
            return cmd_convert(args, cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as e:
        print(f"error[{EXIT_USAGE}]: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigurationError, EmptyBlockError, UnreachablePorosityError) as e:
        print(f"error[{EXIT_CONFIG}]: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalInstabilityError, ProtocolError) as e:
        print(f"error[{EXIT_RUNTIME}]: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except (FormatError, OSError) as e:
        print(f"error[{EXIT_IO}]: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
