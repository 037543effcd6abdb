"""Run every campaign spec in scripts/specs and write JSON + CSV reports."""

import argparse
import sys
from pathlib import Path

from agcomp.errors import ConfigError
from agcomp.harness import emit_table, load_spec, run_campaign

HERE = Path(__file__).resolve().parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--specs", default=str(HERE / "specs"))
    ap.add_argument("--out", default=str(HERE.parent / "results"))
    ap.add_argument("--workers", type=int, default=None, help="overrides AGCOMP_WORKERS")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for path in sorted(Path(args.specs).glob("*.json")):
        try:
            spec = load_spec(path)
        except ConfigError as exc:
            print(f"{path.name:28s} config error in {exc.field}: {exc}")
            status = max(status, 2)
            continue
        rep = run_campaign(spec, workers=args.workers)
        emit_table(rep, "json", out / f"{path.stem}.json")
        emit_table(rep, "csv", out / f"{path.stem}.csv")
        s = rep.summary
        print(f"{path.name:28s} {'ok  ' if rep.ok else 'FAIL'} {s['passed']:6d} passed {s['failed']:4d} failed"
              f"  {rep.wall_time:6.2f} s")
        if not rep.ok:
            status = max(status, 1)
    return status


if __name__ == "__main__":
    sys.exit(main())
