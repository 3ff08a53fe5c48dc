#!/usr/bin/env python3
"""Run the full acceptance matrix and write one CSV per criterion.

Thin wrapper over `weakkam paper-suite`; see --help for scale overrides.
"""
import sys

from weakkam.cli import dispatch

if __name__ == "__main__":
    argv = sys.argv[1:]
    if not any(arg.startswith("--out-dir") for arg in argv):
        argv = ["--out-dir", "paper_suite_results"] + argv
    raise SystemExit(dispatch(["paper-suite"] + argv))
