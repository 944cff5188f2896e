"""Per-feature association scores and gene-level p-value summaries.

Feature relevance follows the linear SKAT score statistic: with
column-centered x and mean-centered y, the score of feature p is
(x_p' y)^2, optionally normalized to the squared Pearson correlation.
Gene-level p-values are summarized (min/max/mean) over the features
mapped to each gene and converted to z-scores via the inverse normal
CDF.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .datamodel import FeatureGeneMap, ValidationError

logger = logging.getLogger(__name__)

__all__ = [
    "RelevanceVector",
    "GeneScores",
    "skat_linear_score",
    "summarize_gene_pvalues",
    "z_from_p",
]


@dataclass
class RelevanceVector:
    """Nonnegative per-feature relevance scores."""

    scores: np.ndarray

    def __init__(self, scores):
        scores = np.asarray(scores, dtype=np.float64).ravel()
        if not np.all(np.isfinite(scores)):
            raise ValidationError("relevance scores must be finite")
        if np.any(scores < 0):
            raise ValidationError("relevance scores must be >= 0")
        scores = scores.copy()
        scores.flags.writeable = False
        self.scores = scores

    def __len__(self) -> int:
        return len(self.scores)


@dataclass
class GeneScores:
    """Per-gene summarized p-value and its z-score."""

    gene_ids: tuple[str, ...]
    p_values: np.ndarray
    z_scores: np.ndarray

    def __init__(self, gene_ids, p_values, z_scores=None):
        self.gene_ids = tuple(str(g) for g in gene_ids)
        p = np.array(p_values, dtype=np.float64).ravel()
        if len(p) != len(self.gene_ids):
            raise ValidationError("gene IDs and p-values differ in length")
        if np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
            raise ValidationError("gene p-values must lie in (0, 1]")
        if z_scores is None:
            z = np.array([z_from_p(v) for v in p])
        else:
            z = np.array(z_scores, dtype=np.float64).ravel()
            expect = np.array([z_from_p(v) for v in p])
            if np.max(np.abs(z - expect), initial=0.0) > 1e-6:
                raise ValidationError("z-scores inconsistent with p-values")
        p.flags.writeable = False
        z.flags.writeable = False
        self.p_values = p
        self.z_scores = z

    def z_by_gene(self) -> dict[str, float]:
        return {g: float(z) for g, z in zip(self.gene_ids, self.z_scores)}

    def __len__(self) -> int:
        return len(self.gene_ids)


def skat_linear_score(X, y, normalize: bool = False) -> RelevanceVector:
    """Linear SKAT-style relevance of each feature for the phenotype.

    Parameters
    ----------
    X : FeatureMatrix or (n, m) array
    y : Phenotype or length-n array
    normalize : bool
        If True, scores become squared Pearson correlations
        (constant columns score 0); otherwise raw (x' y)^2 on the
        centered data.
    """
    Xv = np.asarray(getattr(X, "values", X), dtype=np.float64)
    yv = np.asarray(getattr(y, "values", y), dtype=np.float64).ravel()
    if Xv.ndim != 2 or Xv.shape[0] != len(yv):
        raise ValidationError("X and y are not aligned")
    yc = yv - yv.mean()
    ynorm2 = float(np.dot(yc, yc))
    if ynorm2 == 0.0:
        raise ValidationError("phenotype is constant")
    Xc = Xv - Xv.mean(axis=0)
    dots = Xc.T @ yc
    scores = dots * dots
    if normalize:
        colnorm2 = np.einsum("ij,ij->j", Xc, Xc)
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(colnorm2 > 0, scores / (colnorm2 * ynorm2), 0.0)
    return RelevanceVector(scores)


def summarize_gene_pvalues(
    snp_p: Mapping[str, float],
    mapping: FeatureGeneMap,
    method: str = "min",
) -> GeneScores:
    """Summarize feature p-values into one p-value (and z) per gene.

    ``method`` is one of min, max, mean.  Genes whose mapped features
    all lack a p-value are omitted from the result and reported via
    the module logger.
    """
    if method not in ("min", "max", "mean"):
        raise ValidationError(f"unknown summary method {method!r}")
    for fid, p in snp_p.items():
        if not (0 < p <= 1) or not math.isfinite(p):
            raise ValidationError(f"p-value for feature {fid!r} outside (0, 1]: {p!r}")
    reduce = {"min": min, "max": max, "mean": lambda v: sum(v) / len(v)}[method]

    gene_ids, pvals, missing = [], [], []
    for gene, feats in mapping.features_by_gene().items():
        ps = [snp_p[f] for f in feats if f in snp_p]
        if not ps:
            missing.append(gene)
            continue
        gene_ids.append(gene)
        pvals.append(float(reduce(ps)))
    if missing:
        logger.warning(
            "%d gene(s) have no mapped feature with a p-value and were omitted: %s",
            len(missing), missing[:10],
        )
    return GeneScores(gene_ids, pvals)


# ---------------------------------------------------------------------------
# inverse normal CDF
# ---------------------------------------------------------------------------

# Rational approximation for the normal quantile (Acklam's algorithm),
# polished with one Halley step on the complementary CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425
_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _tail_quantile(q: float) -> float:
    """z >= 0 such that the upper tail P(Z > z) = q, for q in (0, 0.5]."""
    if q < _P_LOW:
        r = math.sqrt(-2.0 * math.log(q))
        x = ((((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5])
             / ((((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0))
        x = -x  # Acklam's lower branch returns the (negative) quantile of q
    else:
        s = q - 0.5
        r = s * s
        x = -(((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s \
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    # Halley refinement on f(x) = Q(x) - q with Q the upper-tail CDF.
    if x * x < 1400.0:
        e = 0.5 * math.erfc(x / _SQRT2) - q
        u = e * _SQRT_2PI * math.exp(min(x * x / 2.0, 700.0))
        x = x + u / (1.0 - x * u / 2.0)
    return x


def z_from_p(p: float) -> float:
    """Upper-tail normal quantile of a p-value.

    Returns z such that P(Z > z) = p for standard normal Z, to within
    1e-8 absolute error.  Inputs are clamped to [1e-300, 1 - 1e-16];
    values outside (0, 1] are rejected.
    """
    p = float(p)
    if not (0.0 < p <= 1.0) or math.isnan(p):
        raise ValidationError(f"p-value outside (0, 1]: {p!r}")
    p = min(max(p, 1e-300), 1.0 - 1e-16)
    if p > 0.5:
        return -_tail_quantile(1.0 - p)
    return _tail_quantile(p)
