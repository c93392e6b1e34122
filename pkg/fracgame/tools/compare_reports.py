#!/usr/bin/env python3
"""Diff two reports.jsonl files by (lemma, inputs_digest); exits 1 when verdicts or sides differ."""
import argparse
import json
import sys
from pathlib import Path


def load(path: Path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            key = (rec["lemma"], rec["inputs_digest"])
            out.setdefault(key, []).append(rec)
    return out


def compare(a: dict, b: dict, rtol: float) -> list[str]:
    diffs = []
    for key in sorted(set(a) | set(b)):
        ra, rb = a.get(key, []), b.get(key, [])
        if len(ra) != len(rb):
            diffs.append(f"{key[0]} {key[1]}: {len(ra)} vs {len(rb)} records")
            continue
        for x, y in zip(ra, rb):
            if x["pass"] != y["pass"]:
                diffs.append(f"{key[0]} {key[1]}: pass {x['pass']} vs {y['pass']}")
            for side in ("lhs", "rhs"):
                u, v = x[side], y[side]
                if isinstance(u, str) or isinstance(v, str):
                    if u != v:
                        diffs.append(f"{key[0]} {key[1]}: {side} {u} vs {v}")
                elif abs(u - v) > rtol * max(1.0, abs(u), abs(v)):
                    diffs.append(f"{key[0]} {key[1]}: {side} {u!r} vs {v!r}")
    return diffs


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--rtol", type=float, default=0.0)
    args = p.parse_args()
    diffs = compare(load(Path(args.a)), load(Path(args.b)), args.rtol)
    for d in diffs:
        print(d)
    print(f"[compare] {len(diffs)} differences")
    sys.exit(1 if diffs else 0)


if __name__ == "__main__":
    main()
