#!/usr/bin/env python3
"""Fetch the Wireless Indoor Localization dataset and write data/wireless.csv.

The source file is tab-separated with 7 WiFi signal-strength columns and a
room label (1..4), 2000 rows.  The output is a headered CSV ready for
`scpkb classify --project --label-column room` and the dataset-dependent
tests (which skip when the file is absent).
"""

import csv
import io
import sys
import urllib.request
from pathlib import Path

URLS = [
    "https://archive.ics.uci.edu/ml/machine-learning-databases/00422/wifi_localization.txt",
    "https://raw.githubusercontent.com/uci-ml-repo/datasets/main/wifi_localization.txt",
]

OUT = Path(__file__).resolve().parent.parent / "data" / "wireless.csv"


def main() -> int:
    raw = None
    for url in URLS:
        try:
            with urllib.request.urlopen(url, timeout=60) as resp:
                raw = resp.read().decode("utf-8")
            print(f"downloaded {url}")
            break
        except Exception as exc:  # noqa: BLE001 - report and try the next mirror
            print(f"failed {url}: {exc}", file=sys.stderr)
    if raw is None:
        print("could not download the dataset from any mirror", file=sys.stderr)
        return 1
    rows = []
    for line in io.StringIO(raw):
        parts = line.split()
        if len(parts) != 8:
            continue
        rows.append(parts)
    if len(rows) != 2000:
        print(f"warning: expected 2000 rows, got {len(rows)}", file=sys.stderr)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"wifi{i + 1}" for i in range(7)] + ["room"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {OUT}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
