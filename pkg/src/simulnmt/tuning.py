"""Grid search over STATIC-RW ``(S, RW)`` under an AP budget."""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

from .agents import static_rw
from .errors import InputError, NoFeasibleAgentError
from .metrics import evaluate_agent


@dataclass(frozen=True)
class GridPoint:
    S: int
    RW: int
    bleu: float
    ap: float


def select_agent(grid, ap_max):
    """Best BLEU among points with ``ap <= ap_max``; ties go to lower AP,
    then smaller S, then smaller RW."""
    feasible = [g for g in grid if g.ap is not None and g.ap <= ap_max]
    if not feasible:
        raise NoFeasibleAgentError(ap_max, list(grid))
    return min(feasible, key=lambda g: (-g.bleu, g.ap, g.S, g.RW))


def _evaluate_point(args):
    params, S, RW, dev_src, dev_ref, beam = args
    res = evaluate_agent(params, static_rw(S, RW), dev_src, dev_ref, beam)
    return GridPoint(S, RW, res.bleu, res.ap)


def evaluate_grid(params, dev_src, dev_ref, S_range, RW_range, beam=1, jobs=1):
    """One :class:`GridPoint` per ``(S, RW)``, in ``S``-major order."""
    S_range, RW_range = list(S_range), list(RW_range)
    if not dev_src or not S_range or not RW_range:
        raise InputError("dev set and both ranges must be non-empty")
    tasks = [(params, S, RW, dev_src, dev_ref, beam) for S in S_range for RW in RW_range]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate_point, tasks))
    return [_evaluate_point(t) for t in tasks]


def tune_static_rw(params, dev_src, dev_ref, S_range, RW_range, ap_max=0.75,
                   beam=1, jobs=1):
    """Returns ``(S, RW, grid)``; raises :class:`NoFeasibleAgentError`
    (carrying the grid) when nothing meets the budget."""
    grid = evaluate_grid(params, dev_src, dev_ref, S_range, RW_range, beam, jobs)
    best = select_agent(grid, ap_max)
    return best.S, best.RW, grid


def _report_order(grid):
    return sorted(grid, key=lambda g: (_ap_key(g.ap), -g.bleu, g.S, g.RW))


def _ap_key(ap):
    return float("inf") if ap is None else ap


def _fmt(x):
    return "nan" if x is None else f"{x:.6f}"


def grid_tsv(grid):
    rows = ["S\tRW\tBLEU\tAP"]
    rows += [f"{g.S}\t{g.RW}\t{_fmt(g.bleu)}\t{_fmt(g.ap)}" for g in _report_order(grid)]
    return "\n".join(rows) + "\n"


def grid_json(grid):
    return json.dumps([asdict(g) for g in _report_order(grid)], indent=1)
