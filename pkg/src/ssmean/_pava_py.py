"""Pooled-adjacent-violators kernel (pure-Python backend).

Same contract as the compiled version in _pava.pyx: stack-based weighted
PAVA over a sequence already ordered by the predictor.
"""
import numpy as np


def pava(values, weights):
    values = np.ascontiguousarray(values, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    n = len(values)
    out = np.empty(n, dtype=np.float64)
    if n == 0:
        return out
    level_val = np.empty(n, dtype=np.float64)
    level_w = np.empty(n, dtype=np.float64)
    level_end = np.empty(n, dtype=np.intp)
    j = -1
    for i in range(n):
        j += 1
        level_val[j] = values[i]
        level_w[j] = weights[i]
        level_end[j] = i + 1
        while j > 0 and level_val[j - 1] > level_val[j]:
            tot = level_w[j - 1] + level_w[j]
            level_val[j - 1] = (level_w[j - 1] * level_val[j - 1] + level_w[j] * level_val[j]) / tot
            level_w[j - 1] = tot
            level_end[j - 1] = level_end[j]
            j -= 1
    start = 0
    for k in range(j + 1):
        out[start : level_end[k]] = level_val[k]
        start = level_end[k]
    return out
