#!/usr/bin/env python3
"""Replay every golden scenario and summarize assertion results.

Usage: python scripts/run_goldens.py [outdir]
"""

import sys
from pathlib import Path

from vinesim.scenario import run_scenario, write_outputs

REPO = Path(__file__).resolve().parents[1]
OUT = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("runs")

failures = 0
for path in sorted((REPO / "scenarios").glob("*.json")):
    record = run_scenario(path)
    write_outputs(record, OUT)
    status = "ok" if record.passed else "FAILED"
    print(f"{path.stem:32s} {status:7s} rows={len(record.rows)} fault={record.fault}")
    for outcome in record.assertion_outcomes:
        mark = "pass" if outcome.passed else "FAIL"
        print(f"    [{mark}] {outcome.description} ({outcome.detail})")
    failures += 0 if record.passed else 1
sys.exit(1 if failures else 0)
