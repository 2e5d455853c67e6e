"""Command-line interface for CFO estimation experiments."""

import functools
import json
import math
import os
import platform
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
import scipy
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from .. import __version__
from ..config.manager import config_manager
from ..config.run_config import RunConfig, load_run_config
from ..core.base import (
    EstimatorType,
    InfeasibleConfigurationError,
    ProcessingError,
    ValidationError,
)
from ..core.crt_engine import build_moduli_set
from ..core.signal_model import (
    ChannelParams,
    apply_channel,
    build_preamble,
    doppler_shift,
    doppler_to_cfo,
    preamble_layout,
    read_iq_file,
    write_iq_file,
)
from ..core.theory import (
    DEFAULT_DELTA,
    ConfigCandidate,
    config_search,
    performance_model,
    snr_threshold,
    threshold_table,
)
from ..operations.estimators import EstimatorConfig, estimate
from ..operations.montecarlo import run_sweep, simulated_threshold, write_sweep_csv, write_sweep_json
from ..utils.files import atomic_write_text
from ..utils.logging import get_logger, setup_logging
from ..utils.validation import Validator

console = Console()
err_console = Console(stderr=True)
logger = get_logger("cli")

EXIT_INFEASIBLE = 1
EXIT_INVALID = 2
SEED_ENV = "CFO_CRT_SEED"


def handle_cli_errors(func):
    """Map the exception hierarchy onto exit codes: 2 for bad input, 1 for failed computation."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            err_console.print(f"[red]Validation Error:[/red] {e}")
            sys.exit(EXIT_INVALID)
        except InfeasibleConfigurationError as e:
            err_console.print(f"[red]Infeasible:[/red] {e}")
            sys.exit(EXIT_INFEASIBLE)
        except ProcessingError as e:
            err_console.print(f"[red]Processing Error:[/red] {e}")
            sys.exit(EXIT_INFEASIBLE)
        except Exception as e:
            err_console.print(f"[red]Unexpected Error:[/red] {e}")
            logger.exception("Unexpected error in CLI")
            sys.exit(EXIT_INFEASIBLE)

    return wrapper


def parse_int_list(text: str, name: str) -> List[int]:
    try:
        return [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise ValidationError(f"{name} must be comma-separated integers, got: {text!r}")


def resolve_seed(cli_seed: Optional[int], config: Optional[RunConfig]) -> int:
    """``--seed``, then the config's master_seed, then $CFO_CRT_SEED, then the configured default."""
    if cli_seed is not None:
        return Validator.validate_positive_int(cli_seed, "seed", minimum=0)
    if config is not None and config.master_seed is not None:
        return config.master_seed

    env_seed = os.getenv(SEED_ENV)
    if env_seed:
        try:
            return Validator.validate_positive_int(int(env_seed), SEED_ENV, minimum=0)
        except ValueError:
            raise ValidationError(f"{SEED_ENV} must be an integer, got: {env_seed!r}")

    return int(config_manager.get("default_seed"))


def software_versions() -> Dict[str, str]:
    return {
        "cfo_crt": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "python": platform.python_version(),
    }


def _fmt_db(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.2f}"


@click.group(invoke_without_command=True)
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="Logging level (overrides the YAML settings)")
@click.option("--log-file", type=click.Path(dir_okay=False), default=None, help="Also log to this file")
@click.version_option(__version__, prog_name="cfo-crt")
@click.pass_context
def cli(ctx, log_level: Optional[str], log_file: Optional[str]):
    """CRT-based carrier frequency offset estimation for OFDM."""
    ctx.ensure_object(dict)
    setup_logging(log_level, log_file)

    if ctx.invoked_subcommand is None:
        console.print(Panel.fit(
            "[bold cyan]cfo-crt[/bold cyan]\n\n"
            "Use '--help' to see all available commands\n\n"
            "[bold]Commands:[/bold]\n"
            "• sweep       - Monte Carlo MSE/IER sweep over SNR\n"
            "• threshold   - SNR threshold for target error probabilities\n"
            "• configure   - Rank co-prime range systems for a DFT size\n"
            "• estimate    - Estimate the CFO of a captured preamble\n"
            "• synthesize  - Write a received preamble to an IQ file\n"
            "• doppler     - Normalized CFO caused by radial velocity\n\n"
            "[bold]Examples:[/bold]\n"
            "• cfo-crt sweep --config templates/default_n64.json --out results\n"
            "• cfo-crt threshold --gammas 3,5,7 --delta 1e-6\n"
            "• cfo-crt configure --n-fft 512 --k 3 --k 4",
            title="cfo-crt",
        ))


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="JSON run config")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None, help="Output directory")
@click.option("--workers", type=int, default=None, help="Worker threads (default: all cores)")
@click.option("--seed", type=int, default=None, help="Master seed (overrides config and $CFO_CRT_SEED)")
@click.option("--trials", type=int, default=None, help="Trials per SNR point (overrides config)")
@click.option("--noiseless", is_flag=True, help="Disable noise (single noiseless point)")
@handle_cli_errors
def sweep(config_path: str, out_dir: Optional[str], workers: Optional[int], seed: Optional[int],
          trials: Optional[int], noiseless: bool):
    """Run a Monte Carlo MSE/IER sweep and write CSV, JSON and manifest files."""
    config = load_run_config(config_path)
    master_seed = resolve_seed(seed, config)
    if trials is None:
        trials = config.trials_per_point or config_manager.get("default_trials")
    trials_per_point = Validator.validate_positive_int(trials, "trials")
    if workers is None:
        workers = config_manager.get("max_workers") or os.cpu_count() or 1
    workers = Validator.validate_positive_int(workers, "workers")

    target = Path(out_dir or config.output.get("dir") or config_manager.get("output_dir"))
    spec = config.sweep_spec(master_seed, trials_per_point, noiseless=noiseless, max_workers=workers)

    with console.status("[bold green]Running sweep..."):
        result = run_sweep(spec)

    written = write_sweep_csv(result, target, config.output["mse_csv"], config.output["ier_csv"])
    json_path = write_sweep_json(result, target / config.output["json"])

    manifest = {
        "config": config.raw,
        "config_path": str(config_path),
        "config_sha256": config.config_hash,
        "master_seed": master_seed,
        "trials_per_point": trials_per_point,
        "noiseless": spec.noiseless,
        "cfo_mode": spec.cfo_mode.value,
        "cfo_values": list(spec.cfo_values),
        "outputs": [p.name for p in written] + [json_path.name],
        "versions": software_versions(),
    }
    atomic_write_text(target / config.output["manifest"], json.dumps(manifest, indent=2) + "\n")

    table = Table(title=f"Sweep (seed {master_seed}, {trials_per_point} trials/point)")
    grid = result.cfo_values is not None
    table.add_column("Method", style="cyan")
    if grid:
        table.add_column("ε_N", justify="right")
    table.add_column("SNR [dB]", justify="right")
    table.add_column("MSE", justify="right")
    table.add_column("CRB", justify="right")
    table.add_column("IER", justify="right")
    for point in result.points:
        cells = [f"{point.snr_db:g}", f"{point.mse:.3e}", f"{point.delta_mse_theory:.3e}", f"{point.ier:.2e}"]
        if grid:
            cells.insert(0, f"{point.eps_n:g}")
        table.add_row(point.method, *cells)
    console.print(table)

    if result.eta_th_db is not None:
        eta_sim = simulated_threshold(result, EstimatorType.CCMLE, result.eta_th_delta) \
            if EstimatorType.CCMLE in spec.methods else None
        console.print(f"η_th(δ={result.eta_th_delta:.1e}) = {result.eta_th_db:.2f} dB, "
                      f"η_sim = {_fmt_db(eta_sim)} dB")
    console.print(f"[green]✓[/green] Results written to {target}")


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON run config")
@click.option("--gammas", default=None, help="Co-prime ranges, e.g. 3,5,7")
@click.option("--m-scale", type=int, default=2, show_default=True, help="Common-remainder modulus M")
@click.option("--delta", "deltas", type=float, multiple=True, help="Target probability (repeatable)")
@click.option("--tabulated", is_flag=True, help="Use x_delta rounded to one decimal")
@handle_cli_errors
def threshold(config_path: Optional[str], gammas: Optional[str], m_scale: int, deltas: Sequence[float],
              tabulated: bool):
    """Print the SNR threshold eta_th for each delta."""
    if config_path:
        config = load_run_config(config_path)
        mset = build_moduli_set(config.gammas, config.m_scale)
        deltas = deltas or config.deltas
        tabulated = tabulated or config.tabulated_x_delta
    elif gammas:
        mset = build_moduli_set(parse_int_list(gammas, "gammas"), m_scale)
    else:
        raise ValidationError("Either --config or --gammas is required")

    rows = threshold_table(mset, deltas or (DEFAULT_DELTA,), tabulated=tabulated)

    table = Table(title=f"SNR threshold for Γ={mset.gammas}")
    table.add_column("δ", justify="right")
    table.add_column("x_δ", justify="right")
    table.add_column("η_th [dB]", justify="right", style="green")
    for row in rows:
        table.add_row(f"{row.delta:.0e}", f"{row.x_delta:.4f}", f"{row.eta_th_db:.2f}")
    console.print(table)
    click.echo(json.dumps({"gammas": list(mset.gammas), "thresholds": [r.to_dict() for r in rows]}))


def _candidate_table(title: str, candidates: Sequence[ConfigCandidate]) -> Table:
    table = Table(title=title)
    table.add_column("Γ", style="cyan")
    table.add_column("L_i")
    table.add_column("Σ_L", justify="right")
    table.add_column("η_th [dB]", justify="right", style="green")
    table.add_column("Layer", justify="right")
    for cand in candidates:
        table.add_row(
            ",".join(map(str, cand.mset.gammas)),
            ",".join(map(str, cand.mset.sample_intervals)),
            f"{cand.model.sigma_l:.3e}",
            f"{cand.threshold.eta_th_db:.2f}",
            str(cand.pareto_layer),
        )
    return table


@cli.command()
@click.option("--n-fft", type=int, required=True, help="DFT size N")
@click.option("--k", "ks", type=int, multiple=True, help="Number of intervals (repeatable, default 3 and 4)")
@click.option("--gammas", default=None, help="Evaluate this tuple only, e.g. 2,5,7,13")
@click.option("--delta", type=float, default=DEFAULT_DELTA, show_default=True, help="Target probability")
@click.option("--limit", type=int, default=20, show_default=True, help="Rows to show")
@handle_cli_errors
def configure(n_fft: int, ks: Sequence[int], gammas: Optional[str], delta: float, limit: int):
    """Rank feasible co-prime range systems for a DFT size."""
    n = Validator.validate_positive_int(n_fft, "n_fft", minimum=8)

    if gammas:
        mset = build_moduli_set(parse_int_list(gammas, "gammas"), 2)
        if mset.sample_intervals[0] >= n:
            raise InfeasibleConfigurationError(
                f"Γ={mset.gammas} needs L_1={mset.sample_intervals[0]} < N={n}")
        query = snr_threshold(mset, delta)
        candidates = [ConfigCandidate(mset, performance_model(mset, n, query.eta_th_linear), query)]
    else:
        candidates = config_search(n, ks or (3, 4), delta=delta)
        if not candidates:
            raise InfeasibleConfigurationError(f"No feasible configuration for N={n}, K={list(ks or (3, 4))}")

    shown = candidates[:limit]
    console.print(_candidate_table(f"Configurations for N={n} (δ={delta:.0e})", shown))
    click.echo(json.dumps([c.to_dict() for c in shown]))


@cli.command(name="estimate")
@click.argument("iq_path", type=click.Path())
@click.option("--config", "config_path", required=True, type=click.Path(), help="JSON run config")
@click.option("--method", type=click.Choice([m.value for m in EstimatorType]), default=EstimatorType.CCMLE.value,
              show_default=True)
@handle_cli_errors
def estimate_cmd(iq_path: str, config_path: str, method: str):
    """Estimate the CFO carried by an IQ file."""
    config = load_run_config(config_path)
    spec = config.waveform_spec()
    buf = read_iq_file(iq_path, preamble_layout(spec))
    cfg = EstimatorConfig(spec=spec, method=method, search_step=config.search_step, snr_hint_db=config.snr_hint_db)
    click.echo(json.dumps(estimate(buf, cfg).to_dict(), indent=2))


@cli.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="JSON run config")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False), help="IQ file to write")
@click.option("--cfo", type=float, required=True, help="Normalized CFO eps_N")
@click.option("--snr-db", type=float, default=math.inf, help="SNR in dB (default: noiseless)")
@click.option("--phase", type=float, default=0.0, help="Channel phase in radians")
@click.option("--seed", type=int, default=None, help="Noise seed")
@handle_cli_errors
def synthesize(config_path: str, out_path: str, cfo: float, snr_db: float, phase: float, seed: Optional[int]):
    """Write a received preamble with the given CFO and SNR to an IQ file."""
    config = load_run_config(config_path)
    spec = config.waveform_spec()
    noise_seed = resolve_seed(seed, config)
    buf = apply_channel(build_preamble(spec), ChannelParams(cfo, snr_db, phase), spec, noise_seed)
    path = write_iq_file(out_path, buf)
    console.print(f"[green]✓[/green] Wrote {buf.length} samples to {path}")


@cli.command()
@click.option("--speed", type=float, required=True, help="Radial velocity in m/s")
@click.option("--carrier", type=float, required=True, help="Carrier frequency in Hz")
@click.option("--spacing", type=float, default=15e3, show_default=True, help="Subcarrier spacing in Hz")
@click.option("--n-fft", type=int, default=None, help="Report whether the CFO fits in ±N/2")
@handle_cli_errors
def doppler(speed: float, carrier: float, spacing: float, n_fft: Optional[int]):
    """Doppler shift and the normalized CFO it causes."""
    eps_n = doppler_to_cfo(speed, carrier, spacing)
    record: Dict[str, Any] = {"doppler_hz": doppler_shift(speed, carrier), "eps_n": eps_n}
    if n_fft is not None:
        n = Validator.validate_positive_int(n_fft, "n_fft", minimum=2)
        record["within_range"] = abs(eps_n) <= n / 2

    console.print(f"Doppler shift: {record['doppler_hz'] / 1e3:.1f} kHz, ε_N = {eps_n:.3f}")
    click.echo(json.dumps(record))


def main():
    cli()


if __name__ == "__main__":
    main()
