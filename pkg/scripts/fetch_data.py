#!/usr/bin/env python3
"""Download the two public datasets into data/.

The library itself never touches the network; this script is the only
component that does.  Both files are small, public, and stable:

  - adult.csv: the UCI census income training table (32561 rows).
    Canonical source: https://archive.ics.uci.edu/ml/machine-learning-databases/adult/adult.data
    (headerless variant; a headered CSV mirror works identically, the
    loader accepts both).
  - compas-scores-two-years.csv: the Broward County recidivism table
    (7214 rows) from https://github.com/propublica/compas-analysis.
"""

import sys
import urllib.request
from pathlib import Path

SOURCES = {
    "adult.csv": (
        "https://archive.ics.uci.edu/ml/machine-learning-databases/adult/adult.data"
    ),
    "compas-scores-two-years.csv": (
        "https://raw.githubusercontent.com/propublica/compas-analysis/master/"
        "compas-scores-two-years.csv"
    ),
}


def main() -> int:
    data_dir = Path(__file__).resolve().parent.parent / "data"
    data_dir.mkdir(exist_ok=True)
    for name, url in SOURCES.items():
        target = data_dir / name
        if target.exists():
            print(f"{target} already present, skipping")
            continue
        print(f"fetching {url}")
        with urllib.request.urlopen(url) as response:
            target.write_bytes(response.read())
        print(f"wrote {target} ({target.stat().st_size} bytes)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
