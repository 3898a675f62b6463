"""Pure-Python twins of the compiled kernels in ``_ext.pyx``.

The float operations mirror the compiled code so both backends produce
identical results; only speed differs.
"""

from __future__ import annotations

from bisect import bisect_right

import numpy as np


def knapsack(values, weights, capacity):
    values = np.asarray(values, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.int64)
    n = len(values)
    out = np.zeros(n, dtype=np.uint8)
    if n == 0:
        return out
    total = int(weights.sum())
    cap = min(max(int(capacity), 0), total)
    if total <= cap:
        out[:] = 1
        return out
    best = np.zeros(cap + 1, dtype=np.float64)
    keep = np.zeros((n, cap + 1), dtype=bool)
    for i in range(n - 1, -1, -1):
        w = int(weights[i])
        if w > cap:
            continue
        take = values[i] + best[: cap + 1 - w]
        row = take >= best[w:]
        keep[i, w:] = row
        best[w:] = np.where(row, take, best[w:])
    c = cap
    for i in range(n):
        if keep[i, c]:
            out[i] = 1
            c -= int(weights[i])
    return out


def run_max_weight(excess, w_c, targets, record_decisions=True, record_deficits=False):
    excess = np.asarray(excess, dtype=np.int64)
    targets = [float(a) for a in targets]
    T, N = excess.shape
    served = np.zeros(N, dtype=np.int64)
    d = [0.0] * N
    dmax = [0.0] * N
    decisions = np.zeros((T, N), dtype=np.uint8) if record_decisions else None
    deficits = np.zeros((T, N), dtype=np.float64) if record_deficits else None
    rows = excess.tolist()
    for t, row in enumerate(rows):
        cap = int(w_c)
        items = []
        for i, e in enumerate(row):
            if e > 0:
                items.append(i)
            else:
                cap -= e
        hit = [False] * N
        if items:
            sel = knapsack([d[i] for i in items], [row[i] for i in items], cap)
            for k, i in enumerate(items):
                if sel[k]:
                    hit[i] = True
        for i in range(N):
            if hit[i]:
                served[i] += 1
                x = d[i] - 1.0
            else:
                x = d[i]
            if x < 0.0:
                x = 0.0
            x = x + targets[i]
            if x < 0.0:
                x = 0.0
            d[i] = x
            if x > dmax[i]:
                dmax[i] = x
        if decisions is not None:
            decisions[t] = [1 if (hit[i] or row[i] <= 0) else 0 for i in range(N)]
        if deficits is not None:
            deficits[t] = d
    return (
        served,
        decisions,
        np.array(d, dtype=np.float64),
        np.array(dmax, dtype=np.float64),
        deficits,
    )


def markov_walk(cumulative, start, uniforms):
    rows = np.asarray(cumulative, dtype=np.float64).tolist()
    last = len(rows[0]) - 1
    s = int(start)
    states = [s]
    for u in np.asarray(uniforms, dtype=np.float64).tolist():
        s = min(bisect_right(rows[s], u), last)
        states.append(s)
    return np.array(states, dtype=np.int64)
