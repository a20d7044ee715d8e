"""Command-line front end.

One command per process: load a fractal (preset name, JSON file, or "-"
for stdin), dispatch the computation, and emit a JSON envelope or CSV
rows. Exit codes: 0 success, 2 data errors, 3 budget errors. The
FRACTAL_BUDGET environment variable overrides the default oriented-edge
budget.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import energy, metric, spectral
from .errors import BudgetExceeded, FractalError, ParseError
from .functions import (
    CellIndicator,
    ConstantFunction,
    CoordinateFunction,
    TableFunction,
)
from .graphs import DEFAULT_BUDGET
from .ifs import fractal_from_json
from .presets import load_preset

COMMANDS = (
    "info",
    "dim",
    "zeta",
    "spectrum",
    "integrate",
    "eigenform",
    "energy",
    "residue",
    "distance",
    "subdivision-check",
    "lip",
    "esslip",
    "vicsek",
)


@dataclass
class RunConfig:
    fractal_source: str
    command: str
    budget: int = DEFAULT_BUDGET
    output: str | None = None
    format: str = "json"
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.budget <= 0:
            raise ParseError("budget must be positive")
        if self.command not in COMMANDS:
            raise ParseError(f"unknown command {self.command!r}")


@dataclass
class ResultEnvelope:
    command: str
    fractal: dict
    values: dict
    diagnostics: dict
    wall_time_s: float
    series: list | None = None  # (header, rows) payload for CSV output

    def to_json(self):
        body = {
            "command": self.command,
            "fractal": self.fractal,
            "values": self.values,
            "diagnostics": self.diagnostics,
            "wall_time_s": self.wall_time_s,
        }
        return json.dumps(body, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj)}")


def load_fractal(source):
    """Resolve a preset name, a JSON file path, or "-" (stdin)."""
    if source == "-":
        return fractal_from_json(sys.stdin.read(), name="stdin")
    try:
        return load_preset(source)
    except KeyError:
        pass
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            return fractal_from_json(fh.read(), name=os.path.basename(source))
    raise ParseError(f"unknown preset and no such file: {source!r}")


def parse_word(text, k):
    """Cell address: a digit string for k <= 9, else comma-separated."""
    text = text.strip()
    if not text:
        return ()
    letters = text.split(",") if "," in text else list(text)
    try:
        return tuple(int(x) for x in letters)
    except ValueError as exc:
        raise ParseError(f"bad cell word {text!r}") from exc


def parse_function(name, fractal):
    """Named vertex functions for --function flags.

    x | y | coord:<axis> | const:<v> | harmonic:<v0 csv> | cell:<word>
    """
    if name == "x":
        return CoordinateFunction(0)
    if name == "y":
        return CoordinateFunction(1)
    kind, _, arg = name.partition(":")
    if kind == "coord":
        return CoordinateFunction(int(arg))
    if kind == "const":
        return ConstantFunction(float(arg))
    if kind == "cell":
        return CellIndicator(parse_word(arg, fractal.k))
    if kind == "harmonic":
        boundary = [float(v) for v in arg.split(",")]
        if len(boundary) != len(fractal.v0):
            raise ParseError(
                f"harmonic boundary needs {len(fractal.v0)} values, got {len(boundary)}"
            )
        result = energy.eigenform(fractal)
        return energy.HarmonicFunction(fractal, result, boundary)
    raise ParseError(f"unknown function {name!r}")


def _read_conductance_csv(path, fractal):
    c = np.zeros(fractal.n_edges)
    seen = np.zeros(fractal.n_edges, dtype=bool)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            p, q, value = int(row[0]), int(row[1]), float(row[2])
            e = fractal.edge_index(p, q)
            c[e] = value
            seen[e] = True
    if not seen.all():
        raise ParseError("conductance file does not cover every E_0 edge")
    return energy.form_from_conductances(fractal, c)


def _read_values_csv(path):
    idx, vals = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            idx.append(int(row[0]))
            vals.append(float(row[1]))
    out = np.full(max(idx) + 1, np.nan)
    out[idx] = vals
    return out


def _fmt(x):
    return f"{x:.17g}"


# -- command implementations --------------------------------------------------


def _cmd_info(fractal, p, budget):
    lengths = fractal.e0_lengths
    distinct = len(np.unique(np.round(lengths, 12)))
    values = {
        "k": fractal.k,
        "lambda": fractal.ratio,
        "ambient_dim": fractal.ambient_dim,
        "v0": fractal.v0.tolist(),
        "edge_lengths": lengths.tolist(),
        "metric_dimension": spectral.metric_dimension(fractal),
        "dedup_tol": fractal.dedup_tol,
    }
    diag = {"distinct_edge_lengths": distinct}
    if distinct > 1:
        diag["note"] = (
            "edge lengths differ; full dihedral symmetry cannot hold "
            "(accepted, not rejected)"
        )
    return values, diag, None


def _cmd_dim(fractal, p, budget):
    return {"d": spectral.metric_dimension(fractal)}, {}, None


def _cmd_zeta(fractal, p, budget):
    s = complex(p["s"][0], p["s"][1])
    if p.get("truncate") is not None:
        value, tail = spectral.zeta_truncated(fractal, s, p["truncate"])
        return (
            {"value": value, "error_bound": tail},
            {"terms": p["truncate"]},
            None,
        )
    value = spectral.zeta(fractal, s)
    return {"value": value}, {}, None


def _cmd_spectrum(fractal, p, budget):
    lo, hi = p["n_range"]
    spec = spectral.dimension_spectrum(fractal, range(lo, hi + 1))
    rows = [
        (int(n), pole.real, pole.imag, res.real, res.imag)
        for n, pole, res in zip(spec.orders, spec.poles, spec.residues)
    ]
    values = {
        "d": spec.d,
        "poles": list(spec.poles),
        "residues": list(spec.residues),
    }
    return values, {}, (("n", "pole_re", "pole_im", "residue_re", "residue_im"), rows)


def _cmd_integrate(fractal, p, budget):
    if p.get("cell") is not None:
        word = parse_word(p["cell"], fractal.k)
        value = spectral.nc_integral_cell(fractal, word)
        return (
            {"value": value, "error_bound": 0.0},
            {"cell_measure": spectral.cell_measure(fractal, word)},
            None,
        )
    f = parse_function(p["function"], fractal)
    value, bound = spectral.nc_integral(fractal, f, p["level"], budget=budget)
    return {"value": value, "error_bound": bound}, {"level": p["level"]}, None


def _cmd_eigenform(fractal, p, budget):
    init = None
    if p.get("init") == "random":
        rng = np.random.default_rng(p["seed"])
        init = energy.form_from_conductances(
            fractal, rng.uniform(0.5, 2.0, fractal.n_edges)
        )
    elif p.get("init"):
        init = _read_conductance_csv(p["init"], fractal)
    result = energy.eigenform(fractal, init=init, tol=p["tol"])
    rows = [
        (int(i), int(j), c)
        for (i, j), c in zip(result.form.pairs, result.form.conductances)
    ]
    values = {
        "rho": result.rho,
        "conductances": result.form.conductances.tolist(),
        "energy_dimension": energy.energy_dimension(fractal, result.rho),
    }
    diag = {"iterations": result.iterations, "residual": result.residual}
    return values, diag, (("p_index", "q_index", "c"), rows)


def _cmd_energy(fractal, p, budget):
    result = energy.eigenform(fractal)
    f = (
        TableFunction(p["nmax"], _read_values_csv(p["values"]))
        if p.get("values")
        else parse_function(p["function"], fractal)
    )
    lim = energy.energy_limit(
        fractal, result.form, f, result.rho, p["nmax"], budget=budget
    )
    rows = list(zip(lim.levels.tolist(), lim.values.tolist()))
    values = {"estimate": lim.estimate, "rho": result.rho}
    diag = {"table": rows}
    return values, diag, (("n", "a_n"), rows)


def _default_residue_nmax(fractal, budget):
    cap = min(budget, 1_000_000)
    n = 0
    while fractal.n_edges * fractal.k ** (n + 1) <= cap:
        n += 1
    return n


def _cmd_residue(fractal, p, budget):
    result = energy.eigenform(fractal)
    delta = energy.energy_dimension(fractal, result.rho)
    base = energy.length_weighted_form(fractal, delta - 2.0)
    f = parse_function(p["function"], fractal)
    nmax = p["nmax"] if p.get("nmax") is not None else _default_residue_nmax(
        fractal, budget
    )
    res = energy.energy_residue(
        fractal, base, f, result.rho, p["eps"], nmax, budget=budget
    )
    rows = list(zip(res.eps.tolist(), res.f_values.tolist()))
    values = {
        "extrapolated": res.extrapolated,
        "delta": delta,
        "rho": result.rho,
    }
    diag = {
        "converged": res.converged,
        "tail_oscillation": res.tail_oscillation,
        "n_max": nmax,
        "renormalized_sums": res.a_table[:, -1].tolist(),
    }
    return values, diag, (("eps", "F"), rows)


def _cmd_distance(fractal, p, budget):
    x = [float(v) for v in p["x"].split(",")]
    y = [float(v) for v in p["y"].split(",")]
    seq = metric.distance_sequence(fractal, x, y, p["nmax"], budget=budget)
    rows = list(zip(seq.levels.tolist(), seq.values.tolist()))
    values = {
        "extrapolated": seq.extrapolated,
        "q": seq.q_estimate,
        "residual": seq.residual,
        "last": float(seq.values[-1]),
    }
    diag = {"first_level": int(seq.levels[0])}
    if p.get("path"):
        graph = fractal.graph(p["nmax"], budget=budget)
        _, witness = metric.shortest_path_distance(
            graph, graph.find_vertex(x), graph.find_vertex(y)
        )
        diag["path"] = [
            graph.vertices[i].tolist() for i in witness.vertex_ids
        ]
    return values, diag, (("n", "d_n"), rows)


def _cmd_subdivision(fractal, p, budget):
    flag, witness = metric.edge_subdivision_check(fractal, budget=budget)
    return {"subdivides": flag, "witness": witness}, {}, None


def _cmd_lip(fractal, p, budget):
    f = parse_function(p["function"], fractal)
    graph = fractal.graph(p["level"], budget=budget)
    return (
        {"value": metric.lip_seminorm(graph, f, fractal=fractal)},
        {"level": p["level"]},
        None,
    )


def _cmd_esslip(fractal, p, budget):
    f = parse_function(p["function"], fractal)
    table = metric.ess_lip_seminorm(
        fractal, f, range(p["nmin"], p["nmax"] + 1), p["nmax"], budget=budget
    )
    values = {"minimum": table.minimum, "rows": table.rows}
    diag = {"level_sups": table.level_sups.tolist()}
    return values, diag, (("n", "tail_sup"), table.rows)


def _cmd_vicsek(fractal, p, budget):
    if p.get("theta") is not None:
        h = energy.vicsek_H_from_angle(p["theta"])
        values = {"H": h, "family": [1.0, 1.0, 1.0, 1.0, h, 1.0 / h]}
        return values, {"theta": p["theta"]}, None
    a, f, g = p["lengths"]
    big_a, big_f, big_g, h = energy.vicsek_conductances_from_lengths(a, f, g)
    return (
        {"A": big_a, "F": big_f, "G": big_g, "H": h},
        {"identity_FG_minus_A2": big_f * big_g - big_a**2},
        None,
    )


_DISPATCH = {
    "info": _cmd_info,
    "dim": _cmd_dim,
    "zeta": _cmd_zeta,
    "spectrum": _cmd_spectrum,
    "integrate": _cmd_integrate,
    "eigenform": _cmd_eigenform,
    "energy": _cmd_energy,
    "residue": _cmd_residue,
    "distance": _cmd_distance,
    "subdivision-check": _cmd_subdivision,
    "lip": _cmd_lip,
    "esslip": _cmd_esslip,
    "vicsek": _cmd_vicsek,
}


def run(config):
    """Dispatch a command; returns the result envelope."""
    t0 = time.perf_counter()
    fractal = load_fractal(config.fractal_source)
    values, diagnostics, series = _DISPATCH[config.command](
        fractal, {**config.params, "seed": config.seed}, config.budget
    )
    envelope = ResultEnvelope(
        command=config.command,
        fractal={
            "source": config.fractal_source,
            "k": fractal.k,
            "lambda": fractal.ratio,
            "v0_size": len(fractal.v0),
            "fingerprint": fractal.fingerprint(),
        },
        values=values,
        diagnostics=diagnostics,
        wall_time_s=time.perf_counter() - t0,
        series=series,
    )
    return envelope


def _emit(envelope, config):
    if config.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf)
        if envelope.series is not None:
            header, rows = envelope.series
            writer.writerow(header)
            for row in rows:
                writer.writerow(
                    [_fmt(v) if isinstance(v, float) else v for v in row]
                )
        else:
            writer.writerow(("key", "value"))
            for key, val in envelope.values.items():
                if isinstance(val, float):
                    val = _fmt(val)
                writer.writerow((key, val))
        text = buf.getvalue()
    else:
        text = envelope.to_json() + "\n"
    if config.output:
        directory = os.path.dirname(os.path.abspath(config.output))
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, config.output)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    else:
        sys.stdout.write(text)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nestedfractal",
        description="dimension, measure, energy and metric data of a "
        "self-similar fractal from its edge system",
    )
    parser.add_argument(
        "--fractal",
        default="gasket",
        help="preset name (gasket, vicsek, gasket3, rhombic-vicsek:<theta>), "
        "JSON file path, or - for stdin",
    )
    parser.add_argument(
        "--budget",
        type=int,
        default=int(os.environ.get("FRACTAL_BUDGET", DEFAULT_BUDGET)),
        help="maximum oriented edge count per generated level",
    )
    parser.add_argument("--output", help="write result to this path (atomic)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--seed", type=int, default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("info")
    sub.add_parser("dim")

    s = sub.add_parser("zeta")
    s.add_argument("--s", required=True, help="RE or RE,IM")
    s.add_argument("--truncate", type=int)

    s = sub.add_parser("spectrum")
    s.add_argument("--n-range", nargs=2, type=int, required=True, metavar=("A", "B"))

    s = sub.add_parser("integrate")
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--cell", help="cell word, e.g. 12 or 1,2")
    grp.add_argument("--function")
    s.add_argument("--level", type=int, default=6)

    s = sub.add_parser("eigenform")
    s.add_argument("--init", help="conductance CSV (p,q,c rows) or 'random'")
    s.add_argument("--tol", type=float, default=1e-12)

    s = sub.add_parser("energy")
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--function")
    grp.add_argument("--values", help="CSV of vertex_id,value at level nmax")
    s.add_argument("--nmax", type=int, required=True)

    s = sub.add_parser("residue")
    s.add_argument("--eps", required=True, help="comma list, decreasing")
    s.add_argument("--nmax", type=int)
    s.add_argument("--function", required=True)

    s = sub.add_parser("distance")
    s.add_argument("--x", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--nmax", type=int, required=True)
    s.add_argument("--path", action="store_true")

    sub.add_parser("subdivision-check")

    s = sub.add_parser("lip")
    s.add_argument("--function", required=True)
    s.add_argument("--level", type=int, required=True)

    s = sub.add_parser("esslip")
    s.add_argument("--function", required=True)
    s.add_argument("--nmin", type=int, required=True)
    s.add_argument("--nmax", type=int, required=True)

    s = sub.add_parser("vicsek")
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--theta", type=float)
    grp.add_argument("--lengths", help="a,f,g")
    return parser


def config_from_args(args):
    params = {}
    for key, val in vars(args).items():
        if key in ("fractal", "budget", "output", "format", "seed", "command"):
            continue
        params[key] = val
    if "s" in params and params["s"] is not None:
        parts = [float(v) for v in params["s"].split(",")]
        params["s"] = (parts[0], parts[1] if len(parts) > 1 else 0.0)
    if "eps" in params and params["eps"] is not None:
        params["eps"] = [float(v) for v in params["eps"].split(",")]
    if "lengths" in params and params["lengths"] is not None:
        vals = [float(v) for v in params["lengths"].split(",")]
        if len(vals) != 3:
            raise ParseError("--lengths needs a,f,g")
        params["lengths"] = vals
    return RunConfig(
        fractal_source=args.fractal,
        command=args.command,
        budget=args.budget,
        output=args.output,
        format=args.format,
        seed=args.seed,
        params=params,
    )


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        envelope = run(config)
    except BudgetExceeded as exc:
        print(f"BudgetExceeded: {exc}", file=sys.stderr)
        return 3
    except (FractalError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    _emit(envelope, config)
    return 0


if __name__ == "__main__":
    sys.exit(main())
