"""Independent oracles for the frozen golden values used by the core tests.

Everything here is brute force or direct formula evaluation with numpy; none
of it shares code with the Rust implementation. Re-run to regenerate
tests/fixtures/*.json.
"""
import itertools
import json
import math
import os

import numpy as np

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "fixtures")


def kripp_bruteforce(matrix, delta):
    """matrix: units x raters, None for missing. Pairwise formulation."""
    units = [[v for v in row if v is not None] for row in matrix]
    units = [u for u in units if len(u) >= 2]
    values = [v for u in units for v in u]
    n = len(values)
    d_o = 0.0
    for u in units:
        m = len(u)
        s = 0.0
        for i, j in itertools.permutations(range(m), 2):
            s += delta(u[i], u[j])
        d_o += s / (m - 1)
    d_o /= n
    d_e = 0.0
    for i, j in itertools.permutations(range(n), 2):
        d_e += delta(values[i], values[j])
    d_e /= n * (n - 1)
    return 1.0 - d_o / d_e


def interval(a, b):
    return float(a - b) ** 2


def ordinal_factory(matrix):
    units = [[v for v in row if v is not None] for row in matrix]
    units = [u for u in units if len(u) >= 2]
    values = [v for u in units for v in u]
    counts = {c: values.count(c) for c in range(1, 6)}

    def ordinal(a, b):
        lo, hi = min(a, b), max(a, b)
        s = sum(counts[g] for g in range(lo, hi + 1))
        return (s - (counts[lo] + counts[hi]) / 2.0) ** 2

    return ordinal


def krippendorff_fixture():
    m = [
        [1, 2, 2],
        [3, 3, None],
        [4, 5, 4],
        [None, 1, 2],
    ]
    return {
        "matrix": m,
        "alpha_interval": kripp_bruteforce(m, interval),
        "alpha_ordinal": kripp_bruteforce(m, ordinal_factory(m)),
    }


def cronbach_fixture():
    grid = [
        [2.0, 3.0, 3.0],
        [4.0, 4.0, 5.0],
        [3.0, 2.0, 3.0],
        [5.0, 4.0, 4.0],
        [1.0, 2.0, 2.0],
    ]
    g = np.array(grid)
    k = g.shape[1]
    item_var = g.var(axis=0, ddof=1).sum()
    total_var = g.sum(axis=1).var(ddof=1)
    alpha = k / (k - 1) * (1 - item_var / total_var)
    return {"grid": grid, "alpha": alpha}


def vif_fixture():
    n = 8
    rng = np.random.default_rng(11)
    raw = rng.normal(size=(n, 3))
    raw -= raw.mean(axis=0)
    q, _ = np.linalg.qr(raw)
    e1, e2, e3 = q[:, 0], q[:, 1], q[:, 2]
    a = e1
    b = 0.8 * e1 + 0.6 * e2
    c = e3
    cols = np.stack([a, b, c], axis=1) * 3.0 + np.array([10.0, -2.0, 0.5])
    cols = np.round(cols, 6)

    def vif(j):
        y = cols[:, j]
        others = np.delete(cols, j, axis=1)
        design = np.column_stack([np.ones(n), others])
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
        resid = y - design @ beta
        r2 = 1 - resid @ resid / ((y - y.mean()) @ (y - y.mean()))
        return 1.0 / (1.0 - r2)

    corr = float(np.corrcoef(cols[:, 0], cols[:, 1])[0, 1])
    return {
        "columns": {"a": cols[:, 0].tolist(), "b": cols[:, 1].tolist(), "c": cols[:, 2].tolist()},
        "corr_ab": corr,
        "vif": {"a": vif(0), "b": vif(1), "c": vif(2)},
    }


def average_ranks(x):
    order = sorted(range(len(x)), key=lambda i: x[i])
    ranks = [0.0] * len(x)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x, y):
    rx, ry = np.array(average_ranks(x)), np.array(average_ranks(y))
    return float(np.corrcoef(rx, ry)[0, 1])


def rank_fixture():
    rng = np.random.default_rng(2024)
    n_docs, n_annot = 10, 20
    latent = np.round(np.linspace(1.6, 4.4, n_docs) + rng.normal(scale=0.15, size=n_docs), 3)
    ratings = []  # (annotator, doc, rating) on the newsworthiness statement
    for a in range(n_annot):
        bias = rng.normal(scale=0.4)
        rated = sorted(rng.choice(n_docs, size=6, replace=False).tolist())
        for d in rated:
            r = int(np.clip(np.rint(latent[d] + bias + rng.normal(scale=0.9)), 1, 5))
            ratings.append({"annotator": f"a{a:02d}", "doc": f"d{d}", "rating": r})
    # brute-force win rate: enumerate every annotator and every pair of docs they both rated
    wins = {f"d{d}": 0.0 for d in range(n_docs)}
    games = {f"d{d}": 0 for d in range(n_docs)}
    by_annot = {}
    for r in ratings:
        by_annot.setdefault(r["annotator"], {})[r["doc"]] = r["rating"]
    for a, docs in by_annot.items():
        for (d1, r1), (d2, r2) in itertools.combinations(sorted(docs.items()), 2):
            games[d1] += 1
            games[d2] += 1
            if r1 > r2:
                wins[d1] += 1
            elif r2 > r1:
                wins[d2] += 1
            else:
                wins[d1] += 0.5
                wins[d2] += 0.5
    docs = [f"d{d}" for d in range(n_docs)]
    win_rate = [wins[d] / games[d] for d in docs]
    return {
        "latent": {d: float(latent[i]) for i, d in enumerate(docs)},
        "ratings": ratings,
        "win_rate": {d: win_rate[i] for i, d in enumerate(docs)},
        "spearman_win_rate_vs_latent": spearman(win_rate, latent.tolist()),
    }


def main():
    os.makedirs(OUT, exist_ok=True)
    fixtures = {
        "krippendorff_4x3.json": krippendorff_fixture(),
        "cronbach_5x3.json": cronbach_fixture(),
        "vif_3col.json": vif_fixture(),
        "rank_10doc.json": rank_fixture(),
        "percent_change.json": {"beta": 0.519, "expected": math.expm1(0.519)},
    }
    for name, value in fixtures.items():
        with open(os.path.join(OUT, name), "w") as f:
            json.dump(value, f, indent=2)
            f.write("\n")
        print(name, {k: v for k, v in value.items() if k not in ("ratings", "matrix", "grid", "columns", "latent", "win_rate")})


if __name__ == "__main__":
    main()
