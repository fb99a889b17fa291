#!/usr/bin/env python3
"""Run every registered experiment and write reports + plot tables.

Equivalent to `modsel verify-all` followed by `modsel emit-plots` on the
reports that have a natural figure. Usage:

    python scripts/run_verify_all.py [outdir] [--quick]
"""

import sys
from pathlib import Path

from modsel.cli import main as cli_main

PLOTS = {
    "rate-holder": ["risk-vs-n"],
    "his-profile": ["risk-vs-D"],
    "oracle-ratio-gauss": ["ratio-vs-scenario"],
    "oracle-ratio-holdout": ["ratio-vs-scenario"],
}


def main(argv):
    outdir = argv[1] if len(argv) > 1 and not argv[1].startswith("-") else "modsel-out"
    profile = "quick" if "--quick" in argv else "full"
    rc = cli_main(["--outdir", outdir, "verify-all", "--profile", profile])
    for name, kinds in PLOTS.items():
        report = Path(outdir) / f"{name}.csv"
        if report.exists():
            cli_main(["--outdir", outdir, "emit-plots", str(report), "--kinds", *kinds])
    return rc


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
