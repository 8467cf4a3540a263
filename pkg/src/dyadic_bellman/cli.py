"""Command-line front end.

Exit codes: 0 success (or verified claim), 1 verified claim violated,
2 usage or domain error.
"""

from __future__ import annotations

import math
import sys
from fractions import Fraction
from pathlib import Path

import click
import numpy as np

from . import bellman_eval as be
from . import dyadic_core as dc
from . import extremal_weights as ew
from . import verifier as vf
from .exceptions import BellmanError
from .io import dumps_csv, dumps_json, read_weight, weight_to_dict, write_weight
from .phi_spec import parse_phi

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


def parse_number(text: str) -> float:
    """Accept decimals, ``a/b``, ``e``, ``pi``, ``sqrt:<x>`` and ``dyadic:N,m`` (= m 2**-N)."""
    text = str(text).strip()
    if text.startswith("sqrt:"):
        return math.sqrt(parse_number(text[5:]))
    if text.startswith("dyadic:"):
        N, _, m = text[7:].partition(",")
        return float(Fraction(int(m), 2 ** int(N)))
    if text in ("e", "pi"):
        return math.e if text == "e" else math.pi
    if "/" in text:
        num, _, den = text.partition("/")
        return parse_number(num) / parse_number(den)
    return float(text)


class Number(click.ParamType):
    name = "number"

    def convert(self, value, param, ctx):
        if isinstance(value, (int, float)):
            return float(value)
        try:
            return parse_number(value)
        except (ValueError, ZeroDivisionError):
            self.fail(f"{value!r} is not a number, 'sqrt:<x>' or 'dyadic:N,m'", param, ctx)


class PhiParam(click.ParamType):
    name = "phi"

    def convert(self, value, param, ctx):
        if not isinstance(value, str):
            return value
        try:
            return parse_phi(value)
        except (BellmanError, OSError, ValueError) as exc:
            self.fail(f"bad Phi selector {value!r}: {exc}", param, ctx)


NUM = Number()
PHI = PhiParam()


def _fail(msg: str, code: int = EXIT_USAGE):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _infer_format(out: str | None, fmt: str | None, default: str) -> str:
    if fmt:
        return fmt
    if out:
        ext = Path(out).suffix.lower().lstrip(".")
        if ext in ("json", "csv"):
            return ext
    return default


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        click.echo(text.rstrip("\n"))


def _emit_record(record: dict, out: str | None, fmt: str | None) -> None:
    if _infer_format(out, fmt, "json") == "csv":
        flat = {k: v for k, v in record.items() if not isinstance(v, (dict, list))}
        _emit(dumps_csv([flat], list(flat)), out)
    else:
        _emit(dumps_json(record), out)


def _emit_rows(rows: list[dict], fields: list[str], out: str | None, fmt: str | None) -> None:
    if _infer_format(out, fmt, "csv") == "json":
        _emit(dumps_json(rows), out)
    else:
        _emit(dumps_csv(rows, fields), out)


def _guard(fn):
    """Turn package errors into exit code 2 with a message."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BellmanError as exc:
            _fail(f"{type(exc).__name__}: {exc}")

    return wrapper


out_option = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file (stdout if omitted).")
fmt_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default=None,
                          help="Output format (inferred from --out when omitted).")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Bellman candidates, sharp Carleson constants and extremal dyadic A2 weights."""


@main.command()
@click.option("--phi", type=PHI, default="power:1", show_default=True)
@click.option("--q", type=NUM, required=True, help="A2 characteristic cap Q >= 1.")
@click.option("--s", type=NUM, required=True, help="Argument sqrt(x1 x2) in [1, sqrt(Q)].")
@click.option("--candidate", type=click.Choice(["af", "alf", "concave"]), default="alf", show_default=True)
@click.option("--method", type=click.Choice(be.METHODS), default="auto", show_default=True)
@out_option
@fmt_option
@_guard
def bellman(phi, q, s, candidate, method, out, fmt):
    """Evaluate a Bellman candidate at s."""
    rep = be.bellman_report(phi, q, s, candidate, method)
    _emit_record(rep.as_dict(), out, fmt)


def _range(text: str) -> list[float]:
    """``a:b:n`` gives n evenly spaced values; otherwise a comma-separated list."""
    if text.count(":") == 2 and not text.startswith(("sqrt:", "dyadic:")):
        a, b, n = text.split(":")
        return list(np.linspace(parse_number(a), parse_number(b), int(n)))
    return [parse_number(t) for t in text.split(",")]


@main.command()
@click.option("--alpha", "alphas", default="1", show_default=True, help="List 'a,b,...' or range 'start:stop:count'.")
@click.option("--q", "qs", default="4", show_default=True, help="List or range of Q values.")
@click.option("--phi", type=PHI, default=None, help="Tabulate K_Phi, k_Phi for this Phi instead of powers.")
@out_option
@fmt_option
@_guard
def constants(alphas, qs, phi, out, fmt):
    """Tabulate the sharp constants over alpha and Q grids."""
    try:
        q_list = _range(qs)
        a_list = _range(alphas)
    except ValueError as exc:
        _fail(f"bad range: {exc}")
    if any(q < 1 for q in q_list):
        _fail("every Q must be >= 1")
    if phi is not None:
        rows = []
        for q in q_list:
            r = be.constants_report(phi, q)
            rows.append({"q": q, "K": r.upper_K, "k": r.lower_k, "K_is_bound": r.upper_bound_only,
                         "K_case": r.upper_case, "k_case": r.lower_case})
        _emit_rows(rows, ["q", "K", "k", "K_is_bound", "K_case", "k_case"], out, fmt)
        return
    rows = []
    for a in a_list:
        for q in q_list:
            K, bound = be.K_alpha_info(a, q)
            rows.append({"alpha": a, "q": q, "K": K, "k": be.k_alpha(a, q), "K_is_bound": bound})
    _emit_rows(rows, ["alpha", "q", "K", "k", "K_is_bound"], out, fmt)


def _doubling(n: int) -> list[int]:
    out, k = [], 1
    while k < n:
        out.append(k)
        k *= 2
    return out + [n]


@main.command()
@click.argument("kind", type=click.Choice(["af", "alf"]))
@click.option("--phi", type=PHI, default="power:1", show_default=True)
@click.option("--s", type=NUM, default=None, help="Target s (af: any s >= 1; alf: L - m 2^-(N+1) (L-1)).")
@click.option("--L", "L", type=NUM, default=None, help="alf: ladder top L.")
@click.option("--N", "N", type=int, default=None, help="alf: dyadic level of the target.")
@click.option("--m", type=int, default=None, help="alf: target numerator, s = L - m 2^-(N+1) (L-1).")
@click.option("--n", type=int, default=8, show_default=True, help="Stages (af) or refinement exponent (alf).")
@click.option("--depth", type=int, default=12, show_default=True, help="alf: materialization depth of the weight.")
@click.option("--weight-out", type=click.Path(dir_okay=False), default=None, help="Write the constructed weight here.")
@out_option
@fmt_option
@_guard
def optimizer(kind, phi, s, L, N, m, n, depth, weight_out, out, fmt):
    """Build an optimizing weight and tabulate the convergence of its sums."""
    if kind == "af":
        if s is None:
            _fail("af needs --s")
        params = ew.AfOptimizerParams(s, n)
        if weight_out:
            write_weight(ew.af_optimizer(params), weight_out)
        table = vf.convergence_study("af", phi, s, None, _doubling(n))
    else:
        if L is None:
            _fail("alf needs --L")
        if N is not None and m is not None:
            params = ew.AlfOptimizerParams(L, N, m, n)
            s = params.target
        elif s is not None:
            params = ew.AlfOptimizerParams.from_target(L, s, n)
        else:
            _fail("alf needs --s or both --N and --m")
        if weight_out:
            write_weight(ew.alf_optimizer(params, depth), weight_out)
        table = vf.convergence_study("alf", phi, s, L, list(range(1, n + 1)))
    _emit_rows(table.csv_rows(), ["n", "sum", "target", "abs_err"], out, fmt)


WEIGHT_FUNCTIONALS = ("induction_upper", "induction_lower", "embedding", "leb", "corr3")


@main.command()
@click.argument("functional", type=click.Choice(sorted(vf.FUNCTIONALS) + list(WEIGHT_FUNCTIONALS)))
@click.option("--phi", type=PHI, default="power:1", show_default=True)
@click.option("--L", "L", type=NUM, default=2.0, show_default=True)
@click.option("--grid", type=int, default=50, show_default=True, help="Lattice nodes per axis.")
@click.option("--random", "n_random", type=int, default=0, help="Additional random samples.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--truncation", type=NUM, default=vf.V_W_TRUNCATION, show_default=True,
              help="omega_inf is cut at s <= truncation * L.")
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Weight file for weight-based checks.")
@click.option("--gamma", type=NUM, default=1.0, show_default=True)
@click.option("--alpha", type=NUM, default=1.0, show_default=True)
@click.option("--beta", type=NUM, default=0.0, show_default=True)
@out_option
@_guard
def verify(functional, phi, L, grid, n_random, seed, truncation, in_path, gamma, alpha, beta, out):
    """Check an inequality; exit 0 if it holds, 1 if violated."""
    if functional in WEIGHT_FUNCTIONALS:
        if not in_path:
            _fail(f"{functional} needs --in <weight.json>")
        w = read_weight(in_path)
        if functional.startswith("induction"):
            rep = vf.check_induction(w, phi, L, functional.split("_")[1])
        elif functional == "embedding":
            rep = vf.check_embedding(w, phi, np.ones(2**w.depth))
        elif functional == "leb":
            rep = vf.check_leb(w, phi, gamma)
        else:
            rep = vf.check_corr3(w, alpha, beta)
        record = rep.as_dict()
    else:
        rep = vf.sweep(functional, phi, L, grid, truncation=truncation)
        record = rep.as_dict()
        if n_random:
            rnd = vf.sweep(functional, phi, L, mode="random", seed=seed, count=n_random, truncation=truncation)
            record = {**record, "random": rnd.as_dict()}
            worse = rnd.extremal_value < rep.extremal_value if rep.claim.endswith(">= 0") else rnd.extremal_value > rep.extremal_value
            if worse:
                record.update(extremal=rnd.extremal_value, witness=list(rnd.witness))
            record["passed"] = bool(rep.passed and rnd.passed)
    _emit(dumps_json(record), out)
    sys.exit(EXIT_OK if record["passed"] else EXIT_VIOLATION)


@main.group()
def weight():
    """Inspect or generate dyadic weights."""


@weight.command("a2")
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@_guard
def weight_a2(in_path):
    """A2 characteristic of a weight file."""
    w = _load(in_path)
    _emit(dumps_json({"a2": dc.a2_characteristic(w)}), None)


@weight.command("norm")
@click.option("--in", "in_path", type=click.Path(dir_okay=False), required=True)
@click.option("--phi", type=PHI, default="power:1", show_default=True)
@_guard
def weight_norm(in_path, phi):
    """Local Carleson norm and root sum of c_J^Phi."""
    w = _load(in_path)
    val, where = dc.carleson_norm_witness(w, phi)
    _emit(dumps_json({"norm": val, "attained_at": [where.depth, where.index],
                      "carleson_sum": dc.carleson_sum(w, phi)}), None)


@weight.command("counterexample")
@click.option("--kmax", type=int, default=24, show_default=True)
@click.option("--report", is_flag=True, help="Print averages on (0, 2^-n) and the R-sequence norm.")
@out_option
@_guard
def weight_counterexample(kmax, report, out):
    """The weight with unbounded A2 characteristic but bounded Carleson R-norm."""
    w = ew.counterexample_weight(kmax)
    if report:
        from .phi_spec import PhiSpec

        norm, _ = dc.local_norm(dc.carleson_coefficients(w, PhiSpec.power(0)))
        prods = [{"n": n, "product": float(w.products(n)[0]), "n_over_3": n / 3} for n in range(kmax + 1)]
        rmax = max(float(np.max(w.r_level(d))) for d in range(w.depth))
        _emit(dumps_json({"k_max": kmax, "r_norm": norm, "r_max": rmax, "products": prods}), None)
    if out or not report:
        _write_or_print(w, out)


@weight.command("random")
@click.option("--x1", type=NUM, required=True)
@click.option("--x2", type=NUM, required=True)
@click.option("--q", type=NUM, required=True)
@click.option("--depth", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@out_option
@_guard
def weight_random(x1, x2, q, depth, seed, out):
    """Random weight with root averages (x1, x2) and characteristic <= Q."""
    w = dc.random_a2_weight(dc.OmegaPoint(x1, x2, q), depth, seed)
    _write_or_print(w, out)


@weight.command("two-step")
@click.option("--x1", type=NUM, required=True)
@click.option("--q", type=NUM, required=True)
@out_option
@_guard
def weight_two_step(x1, q, out):
    """Depth-1 weight with averages (x1, Q/x1) on the boundary of the class."""
    _write_or_print(ew.two_step(x1, q), out)


def _write_or_print(w, out):
    if out:
        write_weight(w, out)
    else:
        _emit(dumps_json(weight_to_dict(w)), None)


def _load(path):
    try:
        return read_weight(path)
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}")


if __name__ == "__main__":
    main()
