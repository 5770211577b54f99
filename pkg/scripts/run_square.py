#!/usr/bin/env python3
"""Reproduce the planar square maneuver in both controller modes.

Writes log.csv and report.txt for the redesigned controller under
out/square/put (certificate report included; the strict decay-envelope
line is expected to fail at finite step size, see the report) and for
the naive angle-tracking law under out/square/naive, which must stop at
its singularity on the first edge. Exits nonzero if either run fails to
reproduce that picture.
"""

import sys
from pathlib import Path

from pivoted_tracking import cli, simulator


def main() -> int:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("out/square")
    config = str(cli.bundled_config_path())

    cli.main(["simulate", "--config", config, "--out", str(out / "put")])
    put = simulator.run(cli.load_config(Path(config)))

    cli.main(["simulate", "--config", config, "--mode", "naive", "--out", str(out / "naive")])
    naive_cfg = cli.load_config(Path(config))
    import dataclasses

    naive = simulator.run(dataclasses.replace(naive_cfg, mode="naive"))

    flipped = bool((put.log.lam[:, 1] < 0.0).any())
    ok = put.completed and flipped and naive.singular_event is not None
    print()
    print(f"redesigned run completed: {put.completed}, direction flip seen: {flipped}")
    if naive.singular_event is None:
        print("naive run hit no singularity (unexpected)")
    else:
        print(f"naive run singular at t = {naive.singular_event['t']:.3f} s")
    print(f"artifacts under {out}/")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
