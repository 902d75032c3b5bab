#!/usr/bin/env python3
"""Regenerate every reported table at baseline settings.

Equivalent to `execfees reproduce-all` with the default config; artifacts
(fee tables, sensitivity sweeps, regulatory p-sweeps, TWAP fees, expected
payoffs, manifest) land in out/tables by default.
"""
import sys

from execfees.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        args += ["--out", "out/tables"]
    sys.exit(main(["reproduce-all", *args]))
