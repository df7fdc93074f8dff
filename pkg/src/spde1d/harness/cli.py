"""Command-line entry points.

    spde simulate      --config <path|preset> [--seed N] [--out DIR] [--threads K]
    spde converge-space ...
    spde converge-time  ...
    spde noise-rate     ...
    spde fernique       ...
    spde verify         ...

The subcommand decides the experiment kind regardless of the config's `kind`
field; --seed/--out/--threads override the corresponding config values.
Exit status: 0 when every asserted check passes, 1 on check failure, 2 on
configuration errors.
"""

from __future__ import annotations

import sys
from dataclasses import replace

import click

from .. import __version__
from .config import load_config
from .runner import resolve_out_dir, run_experiment


def _common(f):
    f = click.option("--threads", type=int, default=None, help="Worker process count override.")(f)
    f = click.option("--out", type=click.Path(file_okay=False), default=None,
                     help="Output directory (default: config `out`, then $SPDE1D_OUT).")(f)
    f = click.option("--seed", type=int, default=None, help="Seed override.")(f)
    f = click.option("--config", "config_path", required=True, metavar="PATH|PRESET",
                     help="Config file (.toml/.json) or bundled preset name.")(f)
    return f


def _execute(kind: str, config_path: str, seed, out, threads) -> None:
    try:
        cfg = load_config(config_path)
        overrides = {"kind": kind}
        if seed is not None:
            overrides["seed"] = seed
        if threads is not None:
            overrides["threads"] = threads
        cfg = replace(cfg, **overrides)
        manifest, reports = run_experiment(cfg, out_dir=out)
    except (ValueError, FileNotFoundError, RuntimeError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    for rep in reports:
        click.echo(str(rep))
    out_dir = resolve_out_dir(cfg, out)
    click.echo(f"wrote {len(manifest.checksums) + 1} file(s) to {out_dir} (config {manifest.config_hash})")
    failed = [r for r in reports if not r.passed]
    if failed:
        click.echo(f"{len(failed)} check(s) failed: {', '.join(r.name for r in failed)}", err=True)
        sys.exit(1)


@click.group()
@click.version_option(__version__, prog_name="spde")
def main() -> None:
    """Tamed exponential-Euler experiments for stochastic Burgers / Allen-Cahn."""


@main.command("simulate", help="Run trajectories; write per-sample CSVs and H-norm moments.")
@_common
def simulate(config_path, seed, out, threads):
    _execute("simulate", config_path, seed, out, threads)


@main.command("converge-space", help="Strong error over the resolution ladder, plotted against n.")
@_common
def converge_space(config_path, seed, out, threads):
    _execute("converge-space", config_path, seed, out, threads)


@main.command("converge-time", help="Strong error over the resolution ladder, plotted against M.")
@_common
def converge_time(config_path, seed, out, threads):
    _execute("converge-time", config_path, seed, out, threads)


@main.command("noise-rate", help="Spectral truncation error of the noise vs the closed form.")
@_common
def noise_rate(config_path, seed, out, threads):
    _execute("noise-rate", config_path, seed, out, threads)


@main.command("fernique", help="Exponential square-norm moment of the terminal noise.")
@_common
def fernique(config_path, seed, out, threads):
    _execute("fernique", config_path, seed, out, threads)


@main.command("verify", help="Full inequality battery: series, eta selection, moments, bounds.")
@_common
def verify(config_path, seed, out, threads):
    _execute("verify-all", config_path, seed, out, threads)


if __name__ == "__main__":
    main()
