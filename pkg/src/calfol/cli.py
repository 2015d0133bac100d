"""Command-line front end.

Subcommands: verify, table, comass, volume, compare.  JSON is the machine
interface (reports embed the package version, the resolved configuration and
the seed, and are byte-stable across reruns); CSV is used for tabular dumps
only.  Exit codes: 0 success, 1 verification/acceptance failure, 2 usage
error.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import click

from . import __version__
from .cases import CASES, run_all, run_case
from .charforms import Normalization, Split, euler_form
from .comass import form_for, maximize, mixed_vertical_scan, random_search_oracle, verify_bound
from .exalg import evaluate_basis
from .folvol import QuadratureSpec, foliation_volume, ns_profile, parse_model, volume_ratio

OUT_DIR_ENV = "CALFOL_OUT_DIR"


def _load_config(ctx: click.Context, param, value):
    """Config file values become parameter defaults; explicit flags win."""
    if not value:
        return None
    with open(value) as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise click.UsageError("config file must hold a JSON object")
    ctx.default_map = dict(ctx.default_map or {})
    ctx.default_map.update(data)
    return value


_config_option = click.option(
    "--config", type=click.Path(exists=True, dir_okay=False), callback=_load_config,
    is_eager=True, expose_value=False,
    help="JSON file of flag defaults (key = flag name), overridden by explicit flags.",
)


def _emit(report: dict, out: str | None, fmt: str = "json") -> None:
    if fmt == "json":
        text = json.dumps(report, indent=2, sort_keys=True, allow_nan=True)
    else:
        raise ValueError(fmt)
    if out:
        path = Path(out)
        if not path.is_absolute():
            path = Path(os.environ.get(OUT_DIR_ENV, ".")) / path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
        click.echo(f"wrote {path}")
    else:
        click.echo(text)


def _wrap(command: str, seed, config: dict, results) -> dict:
    return {
        "version": __version__,
        "command": command,
        "seed": seed,
        "config": config,
        "results": results,
    }


def _parse_split(text: str) -> Split:
    try:
        k, n = (int(x) for x in text.split(","))
        return Split(k, n)
    except Exception as exc:
        raise click.UsageError(f"bad --split {text!r}: {exc}")


@click.group()
@click.version_option(__version__)
def main():
    """Exact calibration identities, Grassmannian comass, foliation volumes."""


@main.command()
@_config_option
@click.argument("case_id", required=False)
@click.option("--all", "run_everything", is_flag=True, help="Run every registered case.")
@click.option("--slow", is_flag=True, help="Include the slow (8,16) cases.")
@click.option("--out", default=None, help="Write the JSON report to this path.")
def verify(case_id, run_everything, slow, out):
    """Run named symbolic verification cases."""
    if not case_id and not run_everything:
        raise click.UsageError("give a case id or --all (ids: " + ", ".join(CASES) + ")")
    if case_id and case_id not in CASES:
        click.echo(f"unknown case {case_id!r}; known: {', '.join(CASES)}", err=True)
        sys.exit(2)
    results = run_all(slow_ok=slow) if run_everything else [run_case(case_id, slow_ok=slow)]
    report = _wrap("verify", None, {"case": case_id, "all": run_everything, "slow": slow}, results)
    _emit(report, out)
    sys.exit(0 if all(r["passed"] for r in results) else 1)


@main.command()
@_config_option
@click.option("--split", default="4,8", show_default=True)
@click.option("--form", "form_name", default="euler-v", type=click.Choice(["euler-v"]))
@click.option("--out", default=None, help="Write CSV here instead of stdout.")
def table(split, form_name, out):
    """CSV of the V-block Euler form on all canonical basis tuples."""
    import itertools

    sp = _parse_split(split)
    ev = euler_form(sp, "v", Normalization.LITERAL)
    degree = ev.degree()
    gens = [(i, m) for i in sp.u_indices for m in sp.v_indices]
    buf = io.StringIO()
    writer = csv.writer(buf)
    header = [x for t in range(1, degree + 1) for x in (f"i{t}", f"k{t}")]
    writer.writerow(header + ["exact", "float"])
    for combo in itertools.combinations(gens, degree):
        value = evaluate_basis(ev, combo)
        flat = [x for g in combo for x in g]
        writer.writerow(flat + [str(value), repr(float(value))])
    text = buf.getvalue()
    if out:
        path = Path(out)
        if not path.is_absolute():
            path = Path(os.environ.get(OUT_DIR_ENV, ".")) / path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        click.echo(f"wrote {path}")
    else:
        click.echo(text, nl=False)


@main.command()
@_config_option
@click.option("--split", default="4,8", show_default=True)
@click.option("--degree", default=None, type=int,
              help="Plane dimension; defaults to the form degree.")
@click.option("--form", "form_name", default="euler-v", type=click.Choice(["euler-v", "phi"]),
              show_default=True)
@click.option("--restarts", default=64, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--tol", default=1e-9, show_default=True)
@click.option("--samples", default=0, show_default=True,
              help="Also run the bound check on this many random planes.")
@click.option("--oracle/--no-oracle", default=False, help="Run the random-search oracle too.")
@click.option("--workers", default=1, show_default=True)
@click.option("--out", default=None)
def comass(split, degree, form_name, restarts, seed, tol, samples, oracle, workers, out):
    """Maximize a form over decomposable tangent planes."""
    sp = _parse_split(split)
    form, gens = form_for(sp, form_name)
    if degree is None:
        degree = form.degree()
    bound = None
    if form_name == "euler-v" and degree == sp.n - sp.k:
        from .grassmann import axis_sphere_family_plane
        from .comass import CompiledForm

        axis = axis_sphere_family_plane(sp)
        bound = CompiledForm(form, axis.gens).value(axis.matrix)
    rep = maximize(form, sp, degree, restarts=restarts, seed=seed, tol=tol,
                   gens=gens, bound=bound, workers=workers, form_name=form_name)
    result = rep.to_dict()
    if bound is not None:
        result["implied_normalization_constant"] = 1.0 / rep.best_value if rep.best_value else None
    if form_name == "phi":
        result["implied_normalization_constant"] = 1.0 / rep.best_value if rep.best_value else None
        result["value_on_axis_configuration"] = mixed_vertical_scan(sp, n_theta=1)["value_at_zero"] \
            if (sp.k, sp.n) == (4, 8) else None
    if samples:
        check_bound = bound if bound is not None else abs(rep.best_value)
        result["bound_check"] = verify_bound(form, sp, degree, check_bound, samples,
                                             seed=seed + 1, gens=gens)
    if oracle:
        result["oracle_value"] = random_search_oracle(form, sp, degree, seed=seed + 2, gens=gens)
    report = _wrap("comass", seed, {
        "split": split, "degree": degree, "form": form_name, "restarts": restarts,
        "tol": tol, "samples": samples, "workers": workers,
    }, result)
    _emit(report, out)
    failed = bool(rep.notes) and any("exceeds" in n for n in rep.notes)
    sys.exit(1 if failed else 0)


@main.command()
@_config_option
@click.option("--split", default="4,8", show_default=True)
@click.option("--grid", default=9, show_default=True)
@click.option("--h-mode", default="adaptive", type=click.Choice(["adaptive", "aligned"]),
              show_default=True)
@click.option("--out", default=None)
def scan(split, grid, h_mode, out):
    """Mixed vertical-horizontal calibration scan over the angle grid."""
    sp = _parse_split(split)
    result = mixed_vertical_scan(sp, n_theta=grid, h_mode=h_mode)
    report = _wrap("scan", None, {"split": split, "grid": grid, "h_mode": h_mode}, result)
    _emit(report, out)
    sys.exit(0 if result["all_within_bound"] else 1)


@main.command()
@_config_option
@click.option("--model", required=True)
@click.option("--method", default="both", type=click.Choice(["profile", "mc", "both"]),
              show_default=True)
@click.option("--samples", default=40000, show_default=True)
@click.option("--nodes", default=96, show_default=True)
@click.option("--eps", default=1e-4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--profile-table", is_flag=True, help="Also emit the NS latitude profile.")
@click.option("--out", default=None)
def volume(model, method, samples, nodes, eps, seed, profile_table, out):
    """Foliation volume (Gauss-section mass) of one model."""
    try:
        fol = parse_model(model)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    methods = ["profile", "mc"] if method == "both" else [method]
    results = {}
    for meth in methods:
        quad = QuadratureSpec(method=meth, samples=samples, nodes=nodes, eps=eps, seed=seed)
        results[meth] = foliation_volume(fol, quad).to_dict()
    if profile_table and hasattr(fol, "axis_dim"):
        results["ns_profile"] = ns_profile(fol, nodes=min(nodes, 64), eps=eps)
    report = _wrap("volume", seed, {
        "model": model, "method": method, "samples": samples, "nodes": nodes, "eps": eps,
    }, results)
    _emit(report, out)


@main.command()
@_config_option
@click.option("--models", required=True, help="Two model names, comma separated.")
@click.option("--method", default="both", type=click.Choice(["profile", "mc", "both"]),
              show_default=True)
@click.option("--samples", default=40000, show_default=True)
@click.option("--nodes", default=96, show_default=True)
@click.option("--eps", default=1e-4, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--target", default=None, type=float,
              help="Assert the ratio is within --rtol of this value.")
@click.option("--rtol", default=0.01, show_default=True)
@click.option("--out", default=None)
def compare(models, method, samples, nodes, eps, seed, target, rtol, out):
    """Ratio of two foliation volumes, on one or both quadrature methods."""
    names = models.split(",")
    if len(names) != 2:
        raise click.UsageError("--models needs exactly two comma-separated names")
    try:
        fa, fb = parse_model(names[0]), parse_model(names[1])
    except ValueError as exc:
        raise click.UsageError(str(exc))
    methods = ["profile", "mc"] if method == "both" else [method]
    results = {}
    for meth in methods:
        quad = QuadratureSpec(method=meth, samples=samples, nodes=nodes, eps=eps, seed=seed)
        results[meth] = volume_ratio(fa, fb, quad)
    if len(methods) == 2:
        diff = abs(results["profile"]["ratio"] - results["mc"]["ratio"])
        combined = results["profile"]["error_estimate"] + results["mc"]["error_estimate"]
        results["methods_agree"] = bool(diff <= combined)
    ok = results.get("methods_agree", True)
    if target is not None:
        for meth in methods:
            if not math.isclose(results[meth]["ratio"], target, rel_tol=rtol):
                ok = False
    report = _wrap("compare", seed, {
        "models": models, "method": method, "samples": samples, "nodes": nodes,
        "eps": eps, "target": target, "rtol": rtol,
    }, results)
    _emit(report, out)
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
