"""Row-by-row reference computations of the CSV feature recipes.

Deliberately plain Python (``statistics``, ``math``) so they share no code
path with the vectorized implementation.
"""

import csv
import datetime as dt
import math
import statistics


def read_column(path, column):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [dt.date.fromisoformat(r["date"]) for r in rows], [float(r[column]) for r in rows]


def rsi_at(close, t, period=14):
    gains, losses = [], []
    for i in range(1, t + 1):
        d = close[i] - close[i - 1]
        gains.append(d if d > 0 else 0.0)
        losses.append(-d if d < 0 else 0.0)
    ag = sum(gains[:period]) / period
    al = sum(losses[:period]) / period
    for i in range(period, t):
        ag = (ag * (period - 1) + gains[i]) / period
        al = (al * (period - 1) + losses[i]) / period
    if al == 0:
        return 50.0 if ag == 0 else 100.0
    return 100 - 100 / (1 + ag / al)


def finance_rows(close, window):
    """(features, target) for every row with complete history and a next row."""
    out = []
    for t in range(len(close) - 1):
        if t < max(window, 14):
            continue
        ret = close[t] / close[t - 1] - 1
        rets = [close[i] / close[i - 1] - 1 for i in range(t - window + 1, t + 1)]
        vol = statistics.stdev(rets)
        mom = close[t] / close[t - window] - 1
        nxt = close[t + 1] / close[t] - 1
        out.append(([ret, vol, rsi_at(close, t), mom], 1 if nxt > 0 else 0))
    return out


def pageview_rows(dates, views, window):
    out = []
    lv = [math.log1p(v) for v in views]
    for t in range(len(views) - 1):
        if t < window:
            continue
        hist = lv[t - window + 1 : t + 1]
        rmean = statistics.fmean(hist)
        rstd = statistics.stdev(hist)
        mom = lv[t] - lv[t - window]
        day = (dates[t] - dates[0]).days
        ang = 2 * math.pi * day / 7
        out.append(([lv[t], rmean, rstd, mom, math.sin(ang), math.cos(ang)], 1 if lv[t + 1] > rmean else 0))
    return out
