from .common import (BlowupReport, Snapshot, SolverConfig,
                     extract_singularities, track_peaks)
from .cube3d import solve_cube3d
from .one_dim import solve_1d, strip_grid
from .radial import solve_radial_disc
from .rect2d import solve_rect2d

SOLVERS = {
    "strip": solve_1d,
    "radial-disc": solve_radial_disc,
    "rect": solve_rect2d,
    "cube": solve_cube3d,
}


def solve(cfg: SolverConfig) -> BlowupReport:
    """Dispatch to the geometry's solver."""
    try:
        fn = SOLVERS[cfg.geometry]
    except KeyError:
        raise ValueError(f"no solver for geometry {cfg.geometry!r}") from None
    return fn(cfg)

__all__ = [
    "BlowupReport", "Snapshot", "SolverConfig", "extract_singularities",
    "track_peaks", "solve", "solve_1d", "solve_radial_disc", "solve_rect2d",
    "solve_cube3d", "strip_grid", "SOLVERS",
]
