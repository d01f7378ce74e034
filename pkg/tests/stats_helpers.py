"""Goodness-of-fit helpers shared by the sampler and acceptance tests."""

from collections import Counter

import numpy as np
from scipy import stats


def chi2_gof(counts: Counter, law: dict, min_expected: float = 5.0) -> float:
    """p-value of observed counts against an exact law; sparse cells are pooled."""
    total = sum(counts.values())
    extra = set(counts) - set(law)
    if extra:
        return 0.0  # outcome outside the support
    keys = sorted(law, key=repr)
    exp = np.array([float(law[k]) * total for k in keys])
    obs = np.array([counts.get(k, 0) for k in keys], float)
    big = exp >= min_expected
    o = list(obs[big])
    e = list(exp[big])
    if (~big).any():
        o.append(obs[~big].sum())
        e.append(exp[~big].sum())
    if len(o) < 2:
        return 1.0
    return float(stats.chisquare(o, e).pvalue)


def chi2_two_sample(a: Counter, b: Counter) -> float:
    keys = sorted(set(a) | set(b), key=repr)
    table = np.array([[a.get(k, 0) for k in keys], [b.get(k, 0) for k in keys]], float)
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2:
        return 1.0
    return float(stats.chi2_contingency(table)[1])
