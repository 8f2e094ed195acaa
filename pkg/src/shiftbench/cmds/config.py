from __future__ import annotations

import shutil

import typer

from ..common import config as cfgmod
from ..common.io_utils import parse_value

app = typer.Typer(help="Configure shiftbench defaults (saved in ~/.shiftbench/config.toml).")


@app.command("show")
def show():
    defaults = cfgmod.get_defaults()
    typer.echo(f"config file: {cfgmod.CONFIG_FILE}\ncache dir: {cfgmod.get_cache_dir()}")
    if not defaults:
        typer.secho("No defaults set.", fg="yellow")
        return
    for key in sorted(defaults):
        typer.echo(f"  {key} = {defaults[key]!r}")


@app.command("set-cache-dir")
def set_cache_dir(path: str = typer.Argument(..., help="Directory for cached runs and operators")):
    cfgmod.set_cache_dir(path)
    typer.secho(f"Saved cache dir: {path}\nConfig file: {cfgmod.CONFIG_FILE}", fg="green")


@app.command("clear-cache-dir")
def clear_cache_dir():
    if not cfgmod.clear_cache_dir():
        typer.secho("No cache dir to clear.", fg="yellow")
        raise typer.Exit(code=0)
    typer.secho(f"Cleared cache dir; using {cfgmod.get_cache_dir()}", fg="green")


@app.command("set-default")
def set_default(
    key: str = typer.Argument(..., help="Dotted key, e.g. model.seed"),
    value: str = typer.Argument(..., help="TOML value, e.g. 3 or [0.0, 0.5] or '\"power-law\"'"),
):
    """Store a default applied beneath config files and --set for every run."""
    parsed = parse_value(value)
    cfgmod.set_default(key, parsed)
    typer.secho(f"Saved default {key} = {parsed!r}", fg="green")


@app.command("clear-default")
def clear_default(key: str = typer.Argument(..., help="Dotted key to remove")):
    if not cfgmod.clear_default(key):
        typer.secho(f"No default {key} to clear.", fg="yellow")
        raise typer.Exit(code=0)
    typer.secho(f"Cleared default {key}.", fg="green")


@app.command("clear-cache")
def clear_cache():
    """Delete every cached run record and operator frame."""
    root = cfgmod.get_cache_dir()
    removed = 0
    for sub in ("runs", "operators"):
        if (root / sub).exists():
            shutil.rmtree(root / sub)
            removed += 1
    if not removed:
        typer.secho(f"Nothing cached under {root}.", fg="yellow")
        return
    typer.secho(f"Cleared cache under {root}.", fg="green")
