#!/usr/bin/env python3
"""Write the bundled version-1 sunspot files in SILSO semicolon layout.

The original SILSO v1 catalogue is no longer served, so the files are rebuilt
from two widely mirrored copies of it:

  yearly  : statsmodels `sunspots` dataset (1700-2008)
  monthly : R `datasets::sunspot.month` via the `rdatasets` package (1749-2013/09)

Usage: python3 tools/export_silso_v1.py [outdir]
"""
import pathlib
import sys

import rdatasets
import statsmodels.api as sm


def main() -> None:
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)

    yearly = sm.datasets.sunspots.load_pandas().data
    with open(out / "SN_y_v1.txt", "w", encoding="utf-8") as f:
        for year, value in zip(yearly.YEAR, yearly.SUNACTIVITY):
            f.write(f"{int(year)}.5;{value:7.1f}; -1.0;   -1;1\n")

    monthly = rdatasets.data("datasets", "sunspot.month")
    with open(out / "SN_m_v1.txt", "w", encoding="utf-8") as f:
        for k, value in enumerate(monthly.value):
            year, month = 1749 + k // 12, k % 12 + 1
            decimal = year + (month - 0.5) / 12.0
            f.write(f"{year};{month:02d};{decimal:8.3f};{value:7.1f}; -1.0;   -1;1\n")


if __name__ == "__main__":
    main()
