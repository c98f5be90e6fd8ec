"""Command line entry point.

``mwi-forge`` without a subcommand runs the verification suites of a scenario.
Exit codes: 0 when every selected check passes, 1 otherwise, 2 on load errors.
Resource caps can be raised or lowered with ``MWI_FORGE_MAX_STATES`` (rewrite
search) and ``MWI_FORGE_MAX_SITES`` (lattice size).
"""
from __future__ import annotations

import json
import os
import sys
from dataclasses import replace
from importlib import resources

import click

from . import dynamical_algebra as algebra
from . import lattice_spacetime as lattice
from .errors import ForgeError
from .scenario import load
from .suites import PASS, run, select

BUILTIN = ("golden",)


def _apply_env():
    for var, module, attr in (("MWI_FORGE_MAX_STATES", algebra, "MAX_STATES"),
                              ("MWI_FORGE_MAX_SITES", lattice, "DEFAULT_MAX_SITES")):
        raw = os.environ.get(var)
        if raw is None:
            continue
        try:
            value = int(raw)
        except ValueError:
            raise click.UsageError(f"{var} must be an integer, got {raw!r}")
        setattr(module, attr, value)


def builtin_path(name: str) -> str:
    return str(resources.files("mwi_forge") / "scenarios" / f"{name}.yaml")


def load_scenario(path, seed=None, depth=None, order=None):
    """Load ``path`` (or a built-in name), then apply command line overrides."""
    path = path or "golden"
    if path in BUILTIN:
        path = builtin_path(path)
    try:
        sc = load(path, order=order)
    except ForgeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if seed is not None:
        sc = replace(sc, seed=seed)
    if depth is not None:
        sc = replace(sc, depth=depth)
    return sc


def report_json(sc, results, timings: bool = False) -> str:
    counts = {s: sum(r.status == s for r in results) for s in ("pass", "fail", "unknown")}
    doc = {"scenario": os.path.basename(sc.path), "seed": sc.seed, "order": sc.order, "depth": sc.depth,
           "checks": [r.as_dict(timings) for r in sorted(results, key=lambda r: r.id)],
           "summary": counts}
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=True) + "\n"


def summary_lines(results) -> list:
    lines = [f"{r.status.upper():7s} {r.id:20s} {r.seconds:8.2f}s  {r.law}" for r in sorted(results, key=lambda r: r.id)]
    passed = sum(r.status == PASS for r in results)
    lines.append(f"{passed}/{len(results)} checks passed, {sum(r.seconds for r in results):.1f}s")
    return lines


def _emit(sc, results, report, timings, quiet=False):
    text = report_json(sc, results, timings)
    if report == "-":
        click.echo(text, nl=False)
    elif report:
        with open(report, "w") as fh:
            fh.write(text)
    if not quiet:
        for line in summary_lines(results):
            click.echo(line, err=report == "-")
    return 0 if all(r.status == PASS for r in results) else 1


def _common(fn):
    for opt in reversed([
        click.option("--scenario", default=None, help="Scenario file, or 'golden' for the built-in one."),
        click.option("--seed", type=int, default=None, help="Override the scenario seed."),
        click.option("--depth", type=int, default=None, help="Rewrite search depth."),
        click.option("--order", type=int, default=None, help="Renormalization group truncation order."),
        click.option("--report", default=None, help="Write the JSON report here ('-' for stdout)."),
        click.option("--timings", is_flag=True, help="Include wall times in the JSON report."),
    ]):
        fn = opt(fn)
    return fn


def _merge(ctx, **kw):
    base = dict(ctx.obj or {})
    base.update({k: v for k, v in kw.items() if v not in (None, False)})
    return base


@click.group(invoke_without_command=True)
@_common
@click.option("--suite", default=None, help="Check id or group prefix, comma separated; empty runs all.")
@click.pass_context
def main(ctx, **kw):
    """Verify algebraic, renormalization group and anomaly laws on lattice scenarios."""
    _apply_env()
    ctx.obj = {k: v for k, v in kw.items() if v not in (None, False)}
    if ctx.invoked_subcommand is None:
        ctx.exit(_run(ctx.obj))


def _run(opts):
    sc = load_scenario(opts.get("scenario"), opts.get("seed"), opts.get("depth"), opts.get("order"))
    try:
        ids = select(opts.get("suite"))
    except KeyError as exc:
        click.echo(f"error: {exc.args[0]}", err=True)
        return 2
    results = run(sc, ",".join(ids))
    return _emit(sc, results, opts.get("report"), opts.get("timings", False))


@main.command("run")
@_common
@click.option("--suite", default=None, help="Check id or group prefix, comma separated.")
@click.pass_context
def run_cmd(ctx, **kw):
    """Run the verification suites (the default command)."""
    ctx.exit(_run(_merge(ctx, **kw)))


@main.command()
@click.argument("case", type=click.Choice(["fish", "scaling", "axial", "dilation"]))
@_common
@click.pass_context
def anomaly(ctx, case, **kw):
    """Anomaly numerics; prints the JSON report of one case."""
    opts = _merge(ctx, **kw)
    sc = load_scenario(opts.get("scenario"), opts.get("seed"), opts.get("depth"), opts.get("order"))
    results = run(sc, f"anomaly.{case}")
    return ctx.exit(_emit(sc, results, opts.get("report", "-"), opts.get("timings", False)))


@main.command()
@_common
@click.pass_context
def certify(ctx, **kw):
    """Certify the metric interpolation chain of the scenario; prints JSON."""
    opts = _merge(ctx, **kw)
    sc = load_scenario(opts.get("scenario"), opts.get("seed"), opts.get("depth"), opts.get("order"))
    results = run(sc, "metrics.chain")
    return ctx.exit(_emit(sc, results, opts.get("report", "-"), opts.get("timings", False)))


@main.command()
@click.argument("left")
@click.argument("right")
@_common
@click.option("--lagrangian", default=None, help="Lagrangian id of the scenario (default: the first).")
@click.pass_context
def prove(ctx, left, right, lagrangian, **kw):
    """Decide whether two words are provably equal, e.g. ``"S[phi(1,1)] S[phi(6,6)]"``."""
    opts = _merge(ctx, **kw)
    sc = load_scenario(opts.get("scenario"), opts.get("seed"), opts.get("depth"), opts.get("order"))
    if lagrangian is not None and lagrangian not in sc.lagrangians:
        click.echo(f"error: unknown lagrangian {lagrangian!r}", err=True)
        ctx.exit(2)
    context = algebra.DynamicalSpacetime(sc.lagrangian(lagrangian), name="A")
    try:
        w1, w2 = algebra.parse_word(left, context), algebra.parse_word(right, context)
    except ForgeError as exc:
        click.echo(f"error: {exc}", err=True)
        ctx.exit(2)
    res = algebra.provably_equal(w1, w2, depth=opts.get("depth") or sc.depth)
    click.echo(res.status)
    if res.equal:
        for line in res.certificate.lines():
            click.echo(line)
    ctx.exit(0 if res.equal else 1)


if __name__ == "__main__":
    main()
