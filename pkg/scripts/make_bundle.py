#!/usr/bin/env python3
"""Regenerate the bundled data files under src/rig/data.

The demo command writes the same bytes, so this only needs rerunning when
an instance definition changes.  Run from the repository root:

    python3 scripts/make_bundle.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from rig.cli import write_demo_files  # noqa: E402


def main():
    data_dir = pathlib.Path(__file__).resolve().parents[1] / "src/rig/data"
    for name in ("matching-pennies", "env-loss", "fig3"):
        files = write_demo_files(name, str(data_dir))
        for fname in sorted(files):
            print(f"wrote {data_dir / fname}")


if __name__ == "__main__":
    main()
