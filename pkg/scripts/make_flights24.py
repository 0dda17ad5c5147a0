"""Regenerate the bundled 24-flight, 8-gate schedule (data/flights24.csv)."""

import argparse
from pathlib import Path

from gatevqe.oracle import greedy_coloring
from gatevqe.schedule import build_conflict_graph, format_schedule, generate_schedule, max_overlap

SEED = 2024
N_FLIGHTS = 24
GATES = 8


def build() -> str:
    sched = generate_schedule(N_FLIGHTS, GATES, SEED)
    assert max_overlap(sched.flights) == GATES
    _, used = greedy_coloring(build_conflict_graph(sched))
    assert used == GATES
    return format_schedule(sched)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-o", "--output", default=str(Path(__file__).resolve().parents[1] / "data" / "flights24.csv"))
    args = ap.parse_args()
    Path(args.output).write_text(build(), encoding="utf-8")
    print(f"wrote {args.output}")


if __name__ == "__main__":
    main()
