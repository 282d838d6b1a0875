"""Independent reimplementation of the benchmark pipeline for the golden test.

Reads the sinusoid fixture and writes the long-form expected CSV
(dataset,gap_minutes,method,metric,value,n_gaps) using numpy/scipy only.

    python3 golden_pipeline.py ../data/sinusoid_24h.csv ../data/sinusoid_expected.csv
"""
import csv
import sys
from datetime import datetime

import numpy as np
from scipy.interpolate import PchipInterpolator, make_interp_spline
from scipy.spatial.distance import jensenshannon

DT = 60
GAP_MINUTES = [5, 15]
SPACING_MINUTES = 1
METHODS = ["linear", "pchip", "bspline", "knn"]
KNN_K = 5
KNN_EPS = 1e-9
SIDE = 6
BINS = 10
BIN_RTOL = 1e-12
DEGENERATE_SD = 1e-12


def load(path):
    with open(path) as f:
        rows = list(csv.DictReader(f))
    t = [datetime.fromisoformat(r["time"].replace("Z", "+00:00")).timestamp() for r in rows]
    y = np.array([float(r["hr"]) for r in rows])
    t = np.array(t)
    assert np.all(np.diff(t) == DT)
    return y


def windows(n, gap_min, spacing_min):
    L, S = gap_min, spacing_min  # dt is one minute
    out, start = [], S
    while start + L <= n - 1:
        out.append(list(range(start, start + L)))
        start += L + S
    return out


def impute(method, ox, oy, tx):
    if method == "linear":
        return np.interp(tx, ox, oy)
    if method == "pchip":
        return PchipInterpolator(ox, oy)(tx)
    if method == "bspline":
        res = []
        for t in tx:
            l = np.searchsorted(ox, t, side="right") - 1
            lo, hi = max(l + 1 - SIDE, 0), min(l + SIDE, len(ox) - 1)
            origin = ox[lo]
            spl = make_interp_spline(ox[lo:hi + 1] - origin, oy[lo:hi + 1], k=3)
            res.append(float(spl(t - origin)))
        return np.array(res)
    if method == "knn":
        res = []
        for t in tx:
            d = np.abs(ox - t)
            order = sorted(range(len(ox)), key=lambda i: (d[i], i))[:KNN_K]
            num = den = 0.0
            for i in order:
                w = 1.0 / max(d[i], KNN_EPS)
                num += w * oy[i]
                den += w
            res.append(num / den)
        return np.array(res)
    raise ValueError(method)


def jsd(real, imp):
    both = np.concatenate([real, imp])
    lo, hi = both.min(), both.max()
    tol = BIN_RTOL * max(abs(lo), abs(hi), 1.0)
    if hi - lo <= tol:
        return 0.0
    # half-open bins, last closed; values within tol below an edge sit on it
    interior = np.linspace(lo, hi, BINS + 1)[1:-1]
    p = np.bincount(np.searchsorted(interior, real + tol, side="right"), minlength=BINS)
    q = np.bincount(np.searchsorted(interior, imp + tol, side="right"), minlength=BINS)
    return min(float(jensenshannon(p / len(real), q / len(imp), base=2)), 1.0)


def cdt(real, imp):
    sp = np.sqrt((np.var(real, ddof=1) + np.var(imp, ddof=1)) / 2)
    diff = abs(real.mean() - imp.mean())
    if sp < DEGENERATE_SD:
        return 0.0 if diff < DEGENERATE_SD else None
    return diff / sp


def main(src, dst):
    y = load(src)
    n = len(y)
    idx = np.arange(n, dtype=float) * DT
    rows = []
    for gap in GAP_MINUTES:
        ws = windows(n, gap, SPACING_MINUTES)
        mask = np.zeros(n, dtype=bool)
        for w in ws:
            mask[w] = True
        ox, oy = idx[~mask], y[~mask]
        for method in METHODS:
            scores = {m: [] for m in ["rmse", "mae", "mape", "cdt", "jsd"]}
            for w in ws:
                real = y[w]
                imp = impute(method, ox, oy, idx[w])
                err = imp - real
                scores["rmse"].append(np.sqrt(np.mean(err ** 2)))
                scores["mae"].append(np.mean(np.abs(err)))
                scores["mape"].append(100 * np.mean(np.abs(err / real)))
                c = cdt(real, imp)
                if c is not None:
                    scores["cdt"].append(c)
                scores["jsd"].append(jsd(real, imp))
            for metric, vals in scores.items():
                rows.append(["sinusoid_24h", gap, method, metric, repr(float(np.mean(vals))), len(vals)])
    with open(dst, "w", newline="") as f:
        wr = csv.writer(f, lineterminator="\n")
        wr.writerow(["dataset", "gap_minutes", "method", "metric", "value", "n_gaps"])
        wr.writerows(rows)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
