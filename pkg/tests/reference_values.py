"""Published relative risk differences for p = 10, Sigma = diag(a^9, ..., a, 1).

Keys are (estimator, a, index) where index is m for the ordinary table and
tau for the Bayes table.  Values are frozen here and never recomputed.
"""

A_LIST = (1.01, 1.05, 1.25, 1.5)
M_GRID = (0, 2, 20, 40, 60, 80, 100)
TAU_GRID = (1, 5, 20, 40, 60, 80, 100)

_ORDINARY_SMALL = {
    1.01: (1.7e-3, 4.8e-4, 2.5e-4, 1.7e-4, 1.3e-4),
    1.05: (1.7e-3, 4.3e-4, 2.0e-4, 1.2e-4, 8.0e-5),
    1.25: (1.9e-3, 2.5e-4, -5.6e-5, -1.7e-4, -2.2e-4),
    1.5: (2.7e-3, 1.6e-4, -3.0e-4, -4.6e-4, -5.4e-4),
}
_ORDINARY_LARGE = {
    "GB": {1.01: (0.79, 0.14), 1.05: (0.75, 0.14), 1.25: (0.63, 0.19), 1.5: (0.63, 0.27)},
    "JS": {1.01: (0.80, 0.14), 1.05: (0.79, 0.14), 1.25: (0.72, 0.19), 1.5: (0.71, 0.25)},
}
_BAYES = {
    "GB": {
        1.01: (0.429, 0.139, 0.039, 0.020, 0.013, 0.010, 0.008),
        1.05: (0.374, 0.144, 0.042, 0.021, 0.015, 0.011, 0.008),
        1.25: (0.105, 0.082, 0.038, 0.021, 0.014, 0.011, 0.009),
        1.5: (0.023, 0.022, 0.019, 0.014, 0.012, 0.010, 0.008),
    },
    "JS": {
        1.01: (0.406, 0.137, 0.039, 0.020, 0.014, 0.010, 0.008),
        1.05: (0.393, 0.143, 0.042, 0.022, 0.015, 0.011, 0.009),
        1.25: (0.122, 0.079, 0.034, 0.020, 0.014, 0.011, 0.009),
        1.5: (0.028, 0.025, 0.018, 0.013, 0.010, 0.008, 0.007),
    },
}

ORDINARY = {}
for _est in ("GB", "JS"):
    for _a in A_LIST:
        row = _ORDINARY_LARGE[_est][_a] + _ORDINARY_SMALL[_a]
        for _m, _v in zip(M_GRID, row):
            ORDINARY[(_est, _a, _m)] = _v

BAYES = {
    (_est, _a, _t): _v
    for _est, rows in _BAYES.items()
    for _a, row in rows.items()
    for _t, _v in zip(TAU_GRID, row)
}
