from __future__ import annotations

import logging
import os
import subprocess
import sys
from importlib.resources import files
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer

from .cmds import config as config_cmd
from .cmds.base import execute
from .cmds.registry import experiments, lookup
from .common.config import build_config
from .common.errors import ShiftbenchError
from .common.io_utils import parse_assignment
from .lab.linalg import MAX_DENSE_SITES

from .cmds import x0001_scan_lr  # noqa: F401
from .cmds import x0002_scan_frobenius  # noqa: F401
from .cmds import x0003_circuitize  # noqa: F401
from .cmds import x0004_hhkl_scan  # noqa: F401
from .cmds import x0005_verify_lemma  # noqa: F401
from .cmds import x0006_verify_super2  # noqa: F401
from .cmds import x0007_verify_fidelity_chain  # noqa: F401
from .cmds import x0008_end_to_end  # noqa: F401
from .cmds import x0009_bounds_table  # noqa: F401
from .cmds import x000A_fit_front  # noqa: F401
from .cmds import x000B_spt_swap  # noqa: F401
from .cmds import x000C_haar_projector  # noqa: F401
from .cmds import x000D_verify_liouvillian  # noqa: F401

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

app = typer.Typer(help="Numerical lab for the hardness of the shift unitary")
app.add_typer(config_cmd.app, name="config")


def _flags(**values: Any) -> Dict[str, Any]:
    keys = {
        "l": "lattice.l",
        "n": "lattice.n",
        "seed": "seed",
        "samples": "samples",
        "t": "time.t",
        "dt": "time.dt",
        "alpha": "model.alpha",
        "model": "model.kind",
        "output": "output.path",
        "fmt": "output.format",
    }
    out = {keys[k]: v for k, v in values.items() if v is not None}
    n, l = values.get("n"), values.get("l")
    if n is not None and l is None and n % 4 == 0:
        out["lattice.l"] = n // 4
    return out


@app.command("run")
def run(
    experiment: str = typer.Argument(..., help="Experiment name; see `shiftbench list`"),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="TOML config file"),
    assignments: Optional[List[str]] = typer.Option(None, "--set", "-s", help="Dotted key=value (can repeat)"),
    l: Optional[int] = typer.Option(None, "--l", help="Ring parameter L (n = 4L)"),
    n: Optional[int] = typer.Option(None, "--n", help="Ring size n (multiple of 4)"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Master seed"),
    samples: Optional[int] = typer.Option(None, "--samples", help="Number of random samples"),
    t: Optional[float] = typer.Option(None, "--t", help="Total evolution time T"),
    dt: Optional[float] = typer.Option(None, "--dt", help="Maximum Trotter step"),
    alpha: Optional[float] = typer.Option(None, "--alpha", help="Power-law exponent"),
    model: Optional[str] = typer.Option(None, "--model", help="nearest-neighbor | power-law"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Artifact path"),
    fmt: Optional[str] = typer.Option(None, "--format", help="csv | json"),
    force: bool = typer.Option(False, "--force", help="Ignore cached results"),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
):
    """
    Run one experiment and write its artifact plus a .run.json record.

    Examples:
      shiftbench run verify-lemma --l 2 --samples 100 --seed 7
      shiftbench run scan-lr --alpha 3 --set options.a='"Z0"' --output lr.csv
    """
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)
    try:
        exp = lookup(experiment)
        cfg = build_config(
            experiment,
            exp.defaults,
            config,
            dict(parse_assignment(a) for a in assignments or []),
            _flags(l=l, n=n, seed=seed, samples=samples, t=t, dt=dt, alpha=alpha, model=model, output=output, fmt=fmt),
            dense_cap=MAX_DENSE_SITES if exp.dense else None,
        )
        status = execute(cfg, force=force)
    except ShiftbenchError as e:
        typer.secho(f"{type(e).__name__}: {e}", fg="red", err=True)
        raise typer.Exit(code=e.exit_code)
    if status != 0:
        raise typer.Exit(code=status)


@app.command("list")
def list_experiments():
    """List the registered experiments."""
    for exp in experiments():
        typer.echo(f"{exp.name:<24} {exp.help}")


# ------------------------------
# Packaged bash scripts
# ------------------------------
scripts_app = typer.Typer(help="Run packaged bash scripts.")


def _script_path(name: str) -> str:
    """Resolve a script bundled under shiftbench/scripts/<name>."""
    return str(files("shiftbench").joinpath("scripts").joinpath(name))


def _run_script_impl(
    script: str,
    args: List[str] | None = None,
    bash: str = "/bin/bash",
    env: List[str] | None = None,
    dry_run: bool = False,
) -> int:
    """Execute a bash script. Returns exit code."""
    script_fs_path = _script_path(script)
    if not os.path.exists(script_fs_path):
        typer.secho(f"Script not found in package: {script}", fg="red")
        return 2

    run_env = os.environ.copy()
    for kv in env or []:
        if "=" not in kv:
            typer.secho(f"Invalid --env '{kv}', expected KEY=VALUE", fg="red")
            return 2
        k, v = kv.split("=", 1)
        run_env[k] = v

    cmd = [bash, script_fs_path, *(args or [])]
    typer.secho(f"$ {' '.join(cmd)}", fg="cyan")
    if dry_run:
        return 0

    try:
        proc = subprocess.Popen(
            cmd,
            env=run_env,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
            bufsize=1,
        )
        assert proc.stdout is not None
        for line in proc.stdout:
            sys.stdout.write(line)
        ret = proc.wait()
    except FileNotFoundError:
        typer.secho(f"Interpreter not found: {bash}", fg="red")
        return 127

    if ret != 0:
        typer.secho(f"Script exited with {ret}", fg="red")
    return ret


@scripts_app.command("run")
def run_script(
    script: str = typer.Argument(..., help="Filename under shiftbench/scripts (e.g. acceptance.sh)"),
    args: Optional[List[str]] = typer.Argument(None, help="Arguments passed to the script"),
    bash: str = typer.Option("/bin/bash", help="Path to bash"),
    env: Optional[List[str]] = typer.Option(None, "--env", "-e", help="Environment KEY=VALUE (can repeat)"),
    dry_run: bool = typer.Option(False, help="Print command then exit"),
):
    """Run a packaged bash script."""
    ret = _run_script_impl(script, args=args, bash=bash, env=env, dry_run=dry_run)
    if ret != 0:
        raise typer.Exit(code=ret)


@scripts_app.command("acceptance")
def acceptance(
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory (default ./shiftbench-out)"),
    force: bool = typer.Option(False, "--force", help="Recompute cached runs"),
    bash: str = typer.Option("/bin/bash", help="Path to bash"),
    dry_run: bool = typer.Option(False, help="Print command then exit"),
):
    """Run every experiment with its acceptance defaults."""
    env = [f"SHIFTBENCH_OUT={out}"] if out else None
    ret = _run_script_impl("acceptance.sh", args=["--force"] if force else [], bash=bash, env=env, dry_run=dry_run)
    if ret != 0:
        raise typer.Exit(code=ret)


app.add_typer(scripts_app, name="scripts")


def main():
    app()


if __name__ == "__main__":
    main()
