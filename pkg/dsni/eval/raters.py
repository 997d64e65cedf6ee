# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import io
import csv

import numpy as np
from scipy import stats
from scipy.special import comb
from easy_enum import Enum

from ..errors import DsniDataError, DimensionError, ConfigError, UndefinedStatisticError

# ordinal score levels of the reader study
SCORE_LEVELS = (1, 2, 3, 4, 5)
# largest group size of the exact rank-sum distribution
EXACT_MAX_N = 20


class EnumIccForm(Enum):
    """ Intraclass correlation forms (single rater) """
    ONE_WAY = (0, 'ICC(1,1) one-way random effects')
    TWO_WAY_RANDOM = (1, 'ICC(2,1) two-way random effects, absolute agreement')
    TWO_WAY_MIXED = (2, 'ICC(3,1) two-way mixed effects, consistency')


ICC_NAMES = {EnumIccForm.ONE_WAY: 'ICC(1,1)', EnumIccForm.TWO_WAY_RANDOM: 'ICC(2,1)',
             EnumIccForm.TWO_WAY_MIXED: 'ICC(3,1)'}


########################################################################################################################
# Score tables
########################################################################################################################

class RaterTable(object):
    """ Counts of every score level per rater and image type """

    FIELDS = ('rater', 'type') + tuple('score{}'.format(s) for s in SCORE_LEVELS)

    def __init__(self, levels=SCORE_LEVELS):
        self.levels = tuple(levels)
        self._rows = {}

    def __repr__(self):
        return "RaterTable <raters: {}, types: {}>".format(len(self.raters), len(self.kinds))

    def __len__(self):
        return len(self._rows)

    def __contains__(self, key):
        return key in self._rows

    @property
    def raters(self):
        return sorted(set(r for r, _ in self._rows))

    @property
    def kinds(self):
        return sorted(set(k for _, k in self._rows))

    def add(self, rater, kind, counts):
        counts = np.asarray(counts)
        if counts.shape != (len(self.levels),):
            raise DimensionError("Expected {} score counts, found {}".format(len(self.levels), counts.shape))
        if np.any(counts < 0) or np.any(counts != np.round(counts)):
            raise DsniDataError("Score counts must be non-negative integers: {}".format(counts.tolist()))
        self._rows[(str(rater), str(kind))] = counts.astype(np.int64)

    def counts(self, rater, kind):
        try:
            return self._rows[(str(rater), str(kind))]
        except KeyError:
            raise DsniDataError("No scores for rater {} and type {}".format(rater, kind))

    def items(self):
        return sorted(self._rows.items())

    def validate(self, images=None):
        """ Every row must count the same number of images (images, when given) """
        totals = {key: int(c.sum()) for key, c in self._rows.items()}
        expected = images if images is not None else (max(totals.values()) if totals else 0)
        bad = {k: v for k, v in totals.items() if v != expected}
        if bad:
            raise DsniDataError("Rows do not sum to {} images: {}".format(expected, bad))

    def export_csv(self):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(self.FIELDS)
        for (rater, kind), counts in self.items():
            writer.writerow([rater, kind] + counts.tolist())
        return out.getvalue()

    @classmethod
    def parse_csv(cls, text):
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != cls.FIELDS:
            raise DsniDataError("Rater table header must be {}, found {}".format(','.join(cls.FIELDS),
                                                                                reader.fieldnames))
        table = cls()
        for row in reader:
            try:
                counts = [int(row['score{}'.format(s)]) for s in SCORE_LEVELS]
            except (TypeError, ValueError) as e:
                raise DsniDataError("Malformed rater table row {}: {}".format(row, e))
            table.add(row['rater'], row['type'], counts)
        return table

    @classmethod
    def load_csv(cls, path):
        with open(path, 'r', newline='') as f:
            return cls.parse_csv(f.read())


def count_stats(counts, levels=SCORE_LEVELS):
    """ Mean and population SD of ordinal scores given as level counts """
    counts = np.asarray(counts, dtype=np.float64)
    levels = np.asarray(levels, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise UndefinedStatisticError("No scores to summarize")
    mean = float(counts.dot(levels) / total)
    var = float(counts.dot((levels - mean) ** 2) / total)
    return mean, float(np.sqrt(var))


def summarize_raters(table):
    """ {(rater, type): (mean, sd)} of a RaterTable """
    return {key: count_stats(counts, table.levels) for key, counts in table.items()}


def paired_ratings(scores):
    """ Ratings matrix [n_subjects, k_raters] from per-image score lists
    :param scores: dict rater -> sequence of scores in a common image order
    """
    columns = [np.asarray(s, dtype=np.float64) for s in scores.values()]
    if len(set(c.shape for c in columns)) > 1:
        raise DimensionError("Raters scored different numbers of images: {}".format(
            {r: len(s) for r, s in scores.items()}))
    return np.stack(columns, axis=1)


########################################################################################################################
# Intraclass correlation
########################################################################################################################

def _anova(ratings):
    x = np.asarray(ratings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise DimensionError("Ratings must be an n x k matrix with n, k >= 2, found shape {}".format(x.shape))
    if not np.all(np.isfinite(x)):
        raise DsniDataError("Ratings contain missing or non-finite cells")
    n, k = x.shape
    grand = x.mean()
    ss_total = float(((x - grand) ** 2).sum())
    if ss_total == 0.0:
        raise UndefinedStatisticError("Ratings have zero total variance")

    ss_rows = k * float(((x.mean(axis=1) - grand) ** 2).sum())
    ss_cols = n * float(((x.mean(axis=0) - grand) ** 2).sum())
    # deviations from the first rater: identical raters give an exact zero
    d = x - x[:, :1]
    ss_within = float(((d - d.mean(axis=1, keepdims=True)) ** 2).sum())
    ss_error = max(ss_within - ss_cols, 0.0)
    return {'n': n, 'k': k,
            'ms_rows': ss_rows / (n - 1),
            'ms_within': ss_within / (n * (k - 1)),
            'ms_cols': ss_cols / (k - 1),
            'ms_error': ss_error / ((n - 1) * (k - 1))}


def icc(ratings, form=EnumIccForm.ONE_WAY):
    """ Single-rater intraclass correlation
    :param ratings: matrix [n_subjects, k_raters]
    :param form: EnumIccForm value
    :return: coefficient (may be negative)
    """
    if form not in EnumIccForm:
        raise ConfigError("Unknown ICC form: {}".format(form))
    a = _anova(ratings)
    n, k = a['n'], a['k']
    if form == EnumIccForm.ONE_WAY:
        num = a['ms_rows'] - a['ms_within']
        den = a['ms_rows'] + (k - 1) * a['ms_within']
    elif form == EnumIccForm.TWO_WAY_RANDOM:
        num = a['ms_rows'] - a['ms_error']
        den = a['ms_rows'] + (k - 1) * a['ms_error'] + k * (a['ms_cols'] - a['ms_error']) / n
    else:
        num = a['ms_rows'] - a['ms_error']
        den = a['ms_rows'] + (k - 1) * a['ms_error']
    if den == 0.0:
        raise UndefinedStatisticError("{} denominator is zero".format(ICC_NAMES[form]))
    return num / den


def icc_interval(ratings, alpha=0.05):
    """ ICC(1,1) with its F-distribution confidence interval
    :return: (icc, lower, upper)
    """
    a = _anova(ratings)
    n, k = a['n'], a['k']
    if a['ms_within'] == 0.0:
        raise UndefinedStatisticError("Interval undefined for raters in perfect agreement")
    f = a['ms_rows'] / a['ms_within']
    df1, df2 = n - 1, n * (k - 1)
    fl = f / stats.f.ppf(1.0 - alpha / 2.0, df1, df2)
    fu = f * stats.f.ppf(1.0 - alpha / 2.0, df2, df1)
    value = (f - 1.0) / (f + k - 1.0)
    return value, (fl - 1.0) / (fl + k - 1.0), (fu - 1.0) / (fu + k - 1.0)


########################################################################################################################
# Rank-sum test
########################################################################################################################

def _midranks(combined):
    """ Midrank of every level given the combined level counts """
    before = np.concatenate([[0], np.cumsum(combined)[:-1]])
    return before + (combined + 1) / 2.0


def rank_sum(x_counts, y_counts):
    """ Rank sum of the first group with its null mean and tie-corrected variance
    :return: (statistic, mean, variance)
    """
    x = np.asarray(x_counts, dtype=np.int64)
    y = np.asarray(y_counts, dtype=np.int64)
    if x.shape != y.shape or x.ndim != 1:
        raise DimensionError(found=x.shape, expected=y.shape)
    if np.any(x < 0) or np.any(y < 0):
        raise DsniDataError("Counts must be non-negative")
    n1, n2 = int(x.sum()), int(y.sum())
    if n1 == 0 or n2 == 0:
        raise DsniDataError("Both groups need at least one score, found {} and {}".format(n1, n2))
    c = x + y
    n = n1 + n2
    w = float(x.dot(_midranks(c)))
    mean = n1 * (n + 1) / 2.0
    ties = float((c ** 3 - c).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1))) if n > 1 else 0.0
    return w, mean, var


def _exact_pvalue(x, y):
    n1 = int(x.sum())
    c = x + y
    n = int(c.sum())
    r2 = (2 * _midranks(c)).astype(np.int64)
    w2 = int(x.dot(r2))
    e2 = n1 * (n + 1)
    top = int(r2.max()) * n1
    # dist[m, s]: ways to pick m items whose doubled ranks sum to s
    dist = np.zeros((n1 + 1, top + 1))
    dist[0, 0] = 1.0
    for cj, rj in zip(c, r2):
        nxt = np.zeros_like(dist)
        for m in range(min(int(cj), n1) + 1):
            ways = comb(int(cj), m, exact=True)
            shift = m * int(rj)
            nxt[m:, shift:] += ways * dist[:n1 + 1 - m, :top + 1 - shift]
        dist = nxt
    sums = np.arange(top + 1)
    tail = dist[n1][np.abs(sums - e2) >= abs(w2 - e2)].sum()
    return min(1.0, float(tail / comb(n, n1, exact=True)))


def wilcoxon_ranksum(x_counts, y_counts, exact=False):
    """ Two-sided Wilcoxon rank-sum P value of two ordinal score histograms
    :param x_counts: counts of the first group per level (ascending level order)
    :param y_counts: counts of the second group
    :param exact: use the exact permutation distribution (groups of at most 20)
    :return: P value
    """
    w, mean, var = rank_sum(x_counts, y_counts)
    if exact:
        x, y = np.asarray(x_counts, dtype=np.int64), np.asarray(y_counts, dtype=np.int64)
        if x.sum() > EXACT_MAX_N or y.sum() > EXACT_MAX_N:
            raise ConfigError("Exact rank-sum test supports groups of at most {}".format(EXACT_MAX_N))
        return _exact_pvalue(x, y)

    dev = max(abs(w - mean) - 0.5, 0.0)
    if dev == 0.0:
        return 1.0
    if var <= 0.0:
        raise UndefinedStatisticError("Rank-sum variance is zero")
    return min(1.0, 2.0 * float(stats.norm.sf(dev / np.sqrt(var))))
