"""Command-line front end: ``hdmrc {rate,schedule,bound,check,sweep}``.

Exit codes: 0 success, 1 solver precondition violated, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from . import rates, sched
from .model import (
    MAX_NODES,
    PreconditionError,
    ScheduleError,
    Topology,
    TopologyError,
    build_gain_matrix,
    validate_schedule,
)

EXIT_OK, EXIT_PRECONDITION, EXIT_INPUT = 0, 1, 2

FILE_KEYS = {"nodes", "gains", "powers", "noises", "kappa", "eta"}


class InputError(ValueError):
    """Unreadable or invalid input file / argument."""


# -- topology files -----------------------------------------------------------


def _where(path: str, node) -> str:
    mark = node.start_mark
    return f"{path}:{mark.line + 1}:{mark.column + 1}"


def parse_topology(text: str, path: str = "<string>") -> Topology:
    """Parse a YAML topology document (see README for the grammar)."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else path
        raise InputError(f"{loc}: {getattr(exc, 'problem', None) or exc}") from None
    if not isinstance(root, yaml.MappingNode):
        raise InputError(f"{path}:1:1: expected a mapping of keys to values")
    loader = yaml.SafeLoader("")
    fields, marks = {}, {}
    for knode, vnode in root.value:
        key = knode.value
        if key not in FILE_KEYS:
            raise InputError(f"{_where(path, knode)}: unknown key {key!r}")
        if key in fields:
            raise InputError(f"{_where(path, knode)}: duplicate key {key!r}")
        fields[key] = loader.construct_object(vnode, deep=True)
        marks[key] = vnode
    for key in ("powers", "noises"):
        if key not in fields:
            raise InputError(f"{path}: missing required key {key!r}")
    if ("nodes" in fields) == ("gains" in fields):
        raise InputError(f"{path}: give exactly one of 'nodes' or 'gains'")
    try:
        return Topology(
            powers=fields["powers"],
            noises=fields["noises"],
            kappa=float(fields.get("kappa", 1.0)),
            eta=float(fields.get("eta", 2.0)),
            positions=fields.get("nodes"),
            gains=fields.get("gains"),
        )
    except (TopologyError, TypeError, ValueError) as exc:
        culprit = next((k for k in ("nodes", "gains", "powers", "noises", "kappa", "eta")
                        if k in marks and k in str(exc)), None)
        loc = _where(path, marks[culprit]) if culprit else path
        raise InputError(f"{loc}: {exc}") from None


def load_topology(path: str) -> Topology:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_topology(text, path)


def dump_topology(topo: Topology) -> str:
    doc = {}
    if topo.positions is not None:
        doc["nodes"] = [list(p) for p in topo.positions]
    else:
        doc["gains"] = [list(r) for r in topo.gains]
    doc.update(powers=list(topo.powers), noises=list(topo.noises), kappa=topo.kappa, eta=topo.eta)
    return yaml.safe_dump(doc, default_flow_style=None, sort_keys=False)


# -- formatting ---------------------------------------------------------------


def fmt(x: float) -> str:
    """12 significant digits, no negative zero."""
    if x == 0:
        return "0"
    return format(x, ".12g")


def _print_report(rep: sched.SolveReport, out=None) -> None:
    out = out or sys.stdout
    D = rep.D
    print(f"{'index':>5}  {'state':<{max(5, 2 * D)}}  probability", file=out)
    for j, label in enumerate(sched.state_labels(D)):
        print(f"{j:>5}  {label:<{max(5, 2 * D)}}  {fmt(rep.schedule[j])}", file=out)
    print(f"\n{'node':>5}  reception_rate", file=out)
    for i, r in rep.reception_rates.items():
        mark = "  *" if i in rep.bottleneck else ""
        print(f"{i:>5}  {fmt(r)}{mark}", file=out)
    print(f"\nmethod:      {rep.method}", file=out)
    print(f"DF rate:     {fmt(rep.df_rate)}", file=out)
    print(f"bottleneck:  {{{', '.join(map(str, rep.bottleneck))}}}", file=out)
    if rep.cutset_bound is not None:
        print(f"cut-set bound: {fmt(rep.cutset_bound)}", file=out)
        print(f"gap:           {fmt(rep.gap)}", file=out)
    for note in rep.notes:
        print(f"note: {note}", file=out)


def _result_line(**fields) -> str:
    return "RESULT " + json.dumps(fields, sort_keys=True)


def _report_fields(rep: sched.SolveReport) -> dict:
    return dict(
        method=rep.method,
        df_rate=rep.df_rate,
        bottleneck=list(rep.bottleneck),
        schedule=[float(v) for v in rep.schedule],
        reception_rates={str(i): r for i, r in rep.reception_rates.items()},
        cutset_bound=rep.cutset_bound,
        gap=rep.gap,
    )


# -- subcommands --------------------------------------------------------------


def cmd_rate(args) -> int:
    topo = load_topology(args.file)
    g = build_gain_matrix(topo)
    if args.schedule is None:
        rep = sched.solve_algorithm2(topo, g)
    else:
        try:
            p = [float(v) for v in args.schedule.split(",")]
        except ValueError:
            raise InputError(f"--schedule: not a comma-separated list of numbers: {args.schedule!r}") from None
        p = validate_schedule(p, topo.D)
        R = rates.reception_rows(g, topo)
        reception = {i + 2: float(v) for i, v in enumerate(R @ p)}
        df, nodes = rates.argmin_nodes(reception)
        rep = sched.SolveReport(p, df, nodes, reception, "given")
    _print_report(rep)
    print(_result_line(**_report_fields(rep)))
    return EXIT_OK


def cmd_schedule(args) -> int:
    topo = load_topology(args.file)
    g = build_gain_matrix(topo)
    if args.method == "grid":
        rep = sched.solve_grid(topo, g, step=args.step)
    else:
        rep = sched.SOLVERS[args.method](topo, g)
    validate_schedule(rep.schedule, topo.D)
    _print_report(rep)
    print(_result_line(**_report_fields(rep)))
    return EXIT_OK


def cmd_bound(args) -> int:
    topo = load_topology(args.file)
    g = build_gain_matrix(topo)
    p_ub, ub = sched.cutset_bound_opt(topo, g)
    validate_schedule(p_ub, topo.D)
    df = sched.solve_algorithm2(topo, g, bound=False).df_rate
    gap = ub - df
    print(f"{'index':>5}  state  bound-optimal probability")
    for j, label in enumerate(sched.state_labels(topo.D)):
        print(f"{j:>5}  {label:<5}  {fmt(p_ub[j])}")
    print(f"\ncut-set bound: {fmt(ub)}")
    print(f"DF rate:       {fmt(df)}")
    print(f"gap:           {fmt(gap)}")
    print(_result_line(cutset_bound=ub, df_rate=df, gap=gap, schedule=[float(v) for v in p_ub]))
    return EXIT_OK


def cmd_check(args) -> int:
    topo = load_topology(args.file)
    g = build_gain_matrix(topo)
    D = topo.D
    ok, triple = rates.is_rsnr_degraded(g, topo)
    print(f"nodes: {D}")
    print(f"relays: {D - 2}")
    print(f"states: {2 ** (D - 2)}")
    if ok:
        print("rSNR-degraded: yes" + (" (vacuous)" if D == 2 else ""))
    else:
        print(f"rSNR-degraded: no, triple ({triple[0]},{triple[1]},{triple[2]})")
    print("gains (row: transmitter, column: receiver):")
    print("      " + "".join(f"{k:>14}" for k in range(2, D + 1)))
    for i in range(1, D):
        print(f"{i:>5} " + "".join(f"{g(i, k):>14.6g}" if i != k else f"{'-':>14}" for k in range(2, D + 1)))
    snr = g.snr(topo)
    print(f"SNR range: {snr[snr > 0].min():.6g} .. {snr.max():.6g}" if np.any(snr > 0) else "SNR range: all zero")
    print(_result_line(D=D, states=2 ** (D - 2), rsnr_degraded=ok, triple=list(triple) if triple else None))
    return EXIT_OK


# -- sweeps -------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    kind: str
    y2: tuple[float, ...] = ()
    y3: tuple[float, ...] = ()
    nodes: tuple[int, ...] = ()
    setting: int = 1
    duplex: str = "both"
    out: Optional[str] = None

    def __post_init__(self):
        if self.kind in ("relay-position-1d", "relay-position-2d"):
            if not self.y2 or not self.y3:
                raise InputError("relay-position sweeps need nonempty y2 and y3 ranges")
            if self.kind == "relay-position-1d" and len(self.y2) != 1:
                raise InputError("relay-position-1d sweeps fix y2 to a single value")
        elif self.kind == "node-count":
            if not self.nodes or min(self.nodes) < 2:
                raise InputError("node-count sweeps need node counts >= 2")
            if self.setting not in (1, 2):
                raise InputError("--setting is 1 (unit spacing) or 2 (fixed span of 20)")
            if self.duplex not in ("half", "full", "both"):
                raise InputError("--duplex is half, full or both")
        else:
            raise InputError(f"unknown sweep kind {self.kind!r}")


def parse_range(text: str, integer: bool = False) -> tuple:
    """``start:stop:step`` (inclusive), ``start:stop`` (step 1) or a single value."""
    parts = text.split(":")
    try:
        nums = [float(v) for v in parts]
    except ValueError:
        raise InputError(f"bad range {text!r}") from None
    if len(nums) == 1:
        vals = nums
    elif len(nums) in (2, 3):
        start, stop = nums[0], nums[1]
        step = nums[2] if len(nums) == 3 else 1.0
        if not step > 0:
            raise InputError(f"range step must be > 0 in {text!r}")
        if stop < start:
            raise InputError(f"empty range {text!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        vals = [start + k * step for k in range(count)]
    else:
        raise InputError(f"bad range {text!r}")
    if integer:
        if any(v != int(v) for v in vals):
            raise InputError(f"range {text!r} must be integral")
        return tuple(int(v) for v in vals)
    return tuple(round(v, 12) for v in vals)


FOUR_NODE_DEFAULT = Topology([10.0] * 3, [0.01] * 3, 1.0, 2.0,
                             positions=[(0, 0), (0, 50), (0, 50), (0, 100)])
LINE_DEFAULT = Topology([10.0], [1.0], 1.0, 2.0, positions=[(1, 0), (2, 0)])


def _position_row(template: Topology, y2: float, y3: float) -> list[str]:
    pos = list(template.positions)
    pos[1] = (pos[1][0], y2)
    pos[2] = (pos[2][0], y3)
    topo = Topology(template.powers, template.noises, template.kappa, template.eta, positions=pos)
    rep = sched.solve_algorithm2(topo, build_gain_matrix(topo))
    return [fmt(y2), fmt(y3), fmt(rep.df_rate), fmt(rep.cutset_bound), str(len(rep.bottleneck))] + [
        fmt(v) for v in rep.schedule
    ]


def line_topology(D: int, setting: int, template: Topology) -> Topology:
    if setting == 1:
        pos = [(float(i), 0.0) for i in range(1, D + 1)]
    else:
        pos = [(20.0 * i / (D - 1), 0.0) for i in range(1, D + 1)]
    return Topology([template.powers[0]] * (D - 1), [template.noises[0]] * (D - 1),
                    template.kappa, template.eta, positions=pos)


def _node_count_row(D: int, duplex: str, setting: int, template: Topology) -> list[str]:
    topo = line_topology(D, setting, template)
    g = build_gain_matrix(topo)
    if duplex == "full":
        value = rates.full_duplex_df_rate(g, topo)[0]
    elif D > MAX_NODES:
        value = math.nan
    elif rates.is_rsnr_degraded(g, topo)[0]:
        value = sched.solve_algorithm3(topo, g, bound=False).df_rate
    else:
        value = sched.solve_algorithm2(topo, g, bound=False).df_rate
    return [str(D), duplex, fmt(value)]


def run_sweep(spec: SweepSpec, template: Optional[Topology] = None, threads: int = 1) -> list[list[str]]:
    """Header plus one row per sweep point, in nested-loop order."""
    if spec.kind == "node-count":
        template = template or LINE_DEFAULT
        modes = ("half", "full") if spec.duplex == "both" else (spec.duplex,)
        jobs = [(D, m) for D in spec.nodes for m in modes]
        header = ["D", "duplex", "df_rate"]
        work = lambda job: _node_count_row(job[0], job[1], spec.setting, template)  # noqa: E731
    else:
        template = template or FOUR_NODE_DEFAULT
        if template.D != 4 or template.positions is None:
            raise InputError("relay-position sweeps need a 4-node template with node positions")
        jobs = [(a, b) for a in spec.y2 for b in spec.y3]
        header = ["y2", "y3", "df_rate", "ub_rate", "bottleneck_size", "p0", "p1", "p2", "p3"]
        work = lambda job: _position_row(template, *job)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(work, jobs))
    else:
        rows = [work(j) for j in jobs]
    return [header] + rows


def write_csv(rows, path: Optional[str]) -> None:
    if path is None or path == "-":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerows(rows)
        return
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def cmd_sweep(args) -> int:
    spec = SweepSpec(
        kind=args.kind,
        y2=parse_range(args.y2) if args.y2 else (),
        y3=parse_range(args.y3) if args.y3 else (),
        nodes=parse_range(args.nodes, integer=True) if args.nodes else (),
        setting=args.setting,
        duplex=args.duplex,
        out=args.out,
    )
    template = load_topology(args.template) if args.template else None
    rows = run_sweep(spec, template, threads=args.threads)
    if spec.kind == "node-count" and any(r[2] == "nan" for r in rows[1:]):
        print(f"warning: half-duplex rates for D > {MAX_NODES} are beyond the exact-solver cap; "
              "written as nan", file=sys.stderr)
    write_csv(rows, spec.out)
    if spec.out not in (None, "-"):
        print(f"wrote {len(rows) - 1} rows to {spec.out}", file=sys.stderr)
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdmrc",
        description="Decode-forward rates, cut-set bounds and optimal schedules for half-duplex relay networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="reception rates and DF rate for a given or optimal schedule")
    p.add_argument("file")
    p.add_argument("--schedule", help="comma-separated state probabilities in canonical order")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("schedule", help="optimal schedule")
    p.add_argument("file")
    p.add_argument("--method", choices=["algo2", "algo3", "lp", "grid", "closed4"], default="algo2")
    p.add_argument("--step", type=float, default=0.01, help="lattice step for --method grid")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("bound", help="cut-set upper bound and its gap to the DF rate")
    p.add_argument("file")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("check", help="instance diagnostics and rSNR-degradedness test")
    p.add_argument("file")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="parameter sweep written as CSV")
    p.add_argument("--kind", required=True, choices=["relay-position-1d", "relay-position-2d", "node-count"])
    p.add_argument("--template", help="topology file supplying powers, noises, kappa, eta (and positions)")
    p.add_argument("--y2", help="node 2 y-coordinate range start:stop:step")
    p.add_argument("--y3", help="node 3 y-coordinate range start:stop:step")
    p.add_argument("--nodes", help="node-count range start:stop[:step]")
    p.add_argument("--setting", type=int, default=1, help="line layout: 1 unit spacing, 2 span of 20")
    p.add_argument("--duplex", default="both", choices=["half", "full", "both"])
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (InputError, TopologyError, ScheduleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
