import argparse
import csv
import logging
import sys

from rich.console import Console
from rich.table import Table

from core.errors import SwapBinError
from core.losses import MEDIAN
from core.metrics import cal_error, mcal1, swap_regret
from core.sweep_engine import SweepEngine, fit_exponent
from core.system_monitor import SystemMonitor
from core.transcript_manager import TranscriptManager
from utils.config_validator import load_config

LOG_FORMAT = "[%(levelname)s][%(name)s][%(asctime)s] %(message)s"

logger = logging.getLogger("swapbin")


class SwapBinLauncher:
    def __init__(self):
        self.console = Console()
        self.parser = self._build_parser()

    def _build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog="swapbin",
                                         description="Swap-regret predictors and sweep harness")
        parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        commands = parser.add_subparsers(dest="command", required=True)

        run = commands.add_parser("run", help="run a (T, seed) sweep from a JSON config")
        run.add_argument("--config", required=True)
        run.add_argument("--out", help="output directory (overrides output.dir)")
        run.add_argument("--jobs", type=int, help="worker processes (default: SWAPBIN_JOBS or cores)")
        run.add_argument("--no-progress", action="store_true")

        fit = commands.add_parser("fit", help="fit the regret growth exponent from summary.csv")
        fit.add_argument("--in", dest="summary", required=True)

        verify = commands.add_parser("verify", help="replay a transcript and recheck every round")
        verify.add_argument("--transcript", required=True)
        return parser

    def initialize_logging(self, verbose: bool) -> None:
        logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)

    def run(self, args) -> int:
        config = load_config(args.config, args.out)
        logger.debug("host: %s", SystemMonitor().get_comprehensive_info())
        engine = SweepEngine(config, jobs=args.jobs)
        sweep = engine.run(progress=not args.no_progress)

        table = Table(title=f"{config.algorithm_name} vs {config.adversary.kind}")
        for column in ("T", "cells", "mean SR", "median SR", "mean CAL", "mean MCal1", "reference"):
            table.add_column(column, justify="right")
        for T, row in sorted(sweep.per_horizon.items()):
            table.add_row(str(T), str(row['cells']), f"{row['mean_swap_regret']:.3f}",
                          f"{row['median_swap_regret']:.3f}", f"{row['mean_cal']:.3f}",
                          f"{row['mean_mcal1']:.3f}", f"{row['reference']:.3f}")
        self.console.print(table)
        if sweep.beta is not None:
            self.console.print(f"fitted exponent beta = {sweep.beta:.4f}, c = {sweep.c:.4f}")
        for cell in sweep.failed:
            self.console.print(f"[red]failed[/red] T={cell['T']} seed={cell['seed']}: {cell['error']}")
        return 1 if sweep.failed else 0

    def fit(self, args) -> int:
        pairs = []
        with open(args.summary, newline='', encoding='utf-8') as handle:
            for row in csv.DictReader(handle):
                if row.get('success') == 'True':
                    pairs.append((int(row['T']), float(row['swap_regret'])))
        beta, c = fit_exponent(pairs)
        table = Table(title="log SR = beta log T + log c")
        table.add_column("cells", justify="right")
        table.add_column("beta", justify="right")
        table.add_column("c", justify="right")
        table.add_row(str(len(pairs)), f"{beta:.4f}", f"{c:.4f}")
        self.console.print(table)
        return 0

    def verify(self, args) -> int:
        result = TranscriptManager('.').verify_transcript(args.transcript)
        if 'transcript' not in result:
            self.console.print(f"[red]cannot load transcript:[/red] {result['error']}")
            return 1
        transcript = result['transcript']
        report = swap_regret(transcript)
        table = Table(title=args.transcript)
        table.add_column("check")
        table.add_column("value", justify="right")
        table.add_row("rounds", str(result['rounds']))
        if result['max_violation'] is not None:
            table.add_row("max_v E[hbar]", f"{result['max_violation']:.3e}")
        table.add_row("swap regret", f"{report.total:.6f}")
        table.add_row("external regret", f"{report.external:.6f}")
        if len(transcript) and not any(rec.outcome is None for rec in transcript.records):
            table.add_row("CAL (median)", f"{cal_error(MEDIAN, transcript.predictions, transcript.outcomes):.6f}")
            table.add_row("MCal1 (median)", f"{mcal1(MEDIAN, transcript.predictions, transcript.outcomes):.6f}")
        self.console.print(table)
        for problem in result['problems']:
            self.console.print(f"[red]{problem}[/red]")
        return 0 if result['success'] else 1

    def launch(self, argv=None) -> int:
        args = self.parser.parse_args(argv)
        self.initialize_logging(args.verbose)
        try:
            return getattr(self, args.command)(args)
        except SwapBinError as e:
            logger.error("%s", e)
            return 2


def main(argv=None) -> int:
    return SwapBinLauncher().launch(argv)


if __name__ == "__main__":
    sys.exit(main())
