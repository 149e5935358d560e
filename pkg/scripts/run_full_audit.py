"""Run every engine end to end through the CLI and collect the reports.

Writes JSON/CSV reports into the given directory (default ./reports) and
prints a one-line verdict per run.  Exit code 0 means every run matched its
expected status; runs that are expected to breach a tolerance (the seam
cross-check, the strict-band delay spread, the feedback-policy time averages)
count as matching when they exit 1.

Usage: python scripts/run_full_audit.py [--outdir reports]
"""

import argparse
import json
import pathlib
import sys

from ergolab.cli import main as cli


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="reports")
    args = parser.parse_args(argv)
    outdir = pathlib.Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    spec_path = outdir / "three_cycle.json"
    spec_path.write_text(
        json.dumps({"n": 3, "theta": [1, 2, 0], "priors": [[1 / 3, 1 / 3, 1 / 3]]})
    )

    runs = [
        ("lab-audit three-cycle", 0,
         ["lab-audit", "--spec", str(spec_path), "--out", str(outdir / "lab_audit.json")]),
        ("lab-enumerate n=3", 0,
         ["lab-enumerate", "--n", "3", "--out", str(outdir / "lab_enumerate_n3.json")]),
        ("gheat solve cos t=1", 0,
         ["gheat", "solve", "--phi", "cos", "--t", "1", "--out", str(outdir / "solve_cos_t1.csv")]),
        ("gheat xcheck linear", 0,
         ["gheat", "xcheck", "--case", "linear", "--out", str(outdir / "xcheck_linear.json")]),
        ("gheat xcheck nonlinear", 0,
         ["gheat", "xcheck", "--case", "nonlinear", "--out", str(outdir / "xcheck_nonlinear.json")]),
        ("gheat xcheck convex (seam finding expected)", 1,
         ["gheat", "xcheck", "--case", "convex", "--out", str(outdir / "xcheck_convex.json")]),
        ("gheat invariant strict band (drift expected)", 1,
         ["gheat", "invariant", "--phi", "cos", "--out", str(outdir / "invariant_cos.json")]),
        ("gheat steady", 0,
         ["gheat", "steady", "--phi", "random:42", "--out", str(outdir / "steady.json")]),
        ("mc-slln state-blind policies", 0,
         ["mc-slln", "--policies", "constant:1.0,random-switching:1.0:0",
          "--out", str(outdir / "mc_blind.json")]),
        ("mc-slln full suite (feedback flags expected)", 1,
         ["mc-slln", "--out", str(outdir / "mc_full.json")]),
    ]

    failures = 0
    for label, expected, argv_ in runs:
        code = cli(argv_)
        status = "ok" if code == expected else f"UNEXPECTED exit {code} (wanted {expected})"
        if code != expected:
            failures += 1
        print(f"{label:48s} exit {code}  {status}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
