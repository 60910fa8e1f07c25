"""
The scw-bench command line
==========================

Drives the same harness through ``scw-bench`` (called in-process here):
a benchmark with a JSON report, then learning curves extracted from it.
The shell equivalent is

    scw-bench bench --synthetic n=2000,d=10,noise=0.1 --algos pa,arow,scw1 \\
        --grid-c 0.25 --grid-eta 0.8 --grid-r 1 --seeds 0..4 \\
        --out-csv runs.csv --out-json report.json
    scw-bench curves report.json --out curves.csv
"""

import csv
import tempfile
from pathlib import Path

from scwlearn.cli import main

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    code = main(["bench", "--synthetic", "n=2000,d=10,noise=0.1", "--algos", "pa,arow,scw1",
                 "--grid-c", "0.25", "--grid-eta", "0.8", "--grid-r", "1", "--seeds", "0..4",
                 "--out-csv", str(tmp / "runs.csv"), "--out-json", str(tmp / "report.json")])
    print("exit code", code)

    main(["curves", str(tmp / "report.json"), "--out", str(tmp / "curves.csv")])
    with open(tmp / "curves.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    # final cumulative mistake rate of seed 0, every 40th checkpoint
    for algo in ("pa", "arow", "scw1"):
        pts = [r for r in rows if r["algo"] == algo and r["seed"] == "0"][39::40]
        print(f"{algo:>5}", " ".join(f"{float(r['cum_mistake_rate']):.3f}" for r in pts))

# a missing input file exits with status 2
print("missing file ->", main(["bench", "--data", "no/such/file", "--algos", "scw1"]))
