"""Writes the synthetic sinusoid fixture used by the end-to-end golden test.

24 h at one sample per minute, 80 + 20 sin(2 pi t / 40 min).
"""
import math
import sys
from datetime import datetime, timedelta, timezone

out = sys.argv[1] if len(sys.argv) > 1 else "sinusoid_24h.csv"
start = datetime(2019, 10, 1, tzinfo=timezone.utc)
with open(out, "w", newline="\n") as f:
    f.write("time,hr\n")
    for i in range(24 * 60):
        t = start + timedelta(minutes=i)
        hr = 80.0 + 20.0 * math.sin(2.0 * math.pi * i / 40.0)
        f.write(f"{t.strftime('%Y-%m-%dT%H:%M:%SZ')},{hr:.6f}\n")
