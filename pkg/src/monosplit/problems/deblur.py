"""l1-regularized least-squares deblurring with a matrix-free blur operator."""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.signal import convolve2d

from ..space import MonotoneMap, ResolventOp, UsageError, soft_threshold
from .base import Problem

ZERO_PAD = "zero_pad"
REPLICATE = "replicate"


def gaussian_kernel(size: int = 9, sigma: float = 4.0) -> np.ndarray:
    """Symmetric 2-D Gaussian kernel normalized to sum 1."""
    if size < 1 or size % 2 == 0:
        raise UsageError("kernel size must be a positive odd number")
    half = size // 2
    ax = np.arange(-half, half + 1, dtype=float)
    xx, yy = np.meshgrid(ax, ax)
    k = np.exp(-(xx**2 + yy**2) / (2.0 * sigma**2))
    return k / k.sum()


@dataclass(frozen=True)
class BlurModel:
    """Convolution kernel plus image geometry and boundary rule."""

    kernel: np.ndarray
    image_dims: Tuple[int, int]
    boundary: str = ZERO_PAD

    def __post_init__(self):
        k = np.asarray(self.kernel, dtype=float)
        if k.ndim != 2 or k.shape[0] % 2 == 0 or k.shape[1] % 2 == 0:
            raise UsageError("kernel must be 2-D with odd side lengths")
        if abs(k.sum() - 1.0) > 1e-12:
            raise UsageError("kernel must be normalized to sum 1")
        if not (np.allclose(k, k[::-1, :]) and np.allclose(k, k[:, ::-1])):
            raise UsageError("kernel must be symmetric")
        if self.boundary not in (ZERO_PAD, REPLICATE):
            raise UsageError(f"unknown boundary rule {self.boundary!r}")
        if self.image_dims[0] < 1 or self.image_dims[1] < 1:
            raise UsageError("image dimensions must be positive")


class BlurOperator:
    """Matrix-free blur with an exact adjoint for both boundary rules.

    The image is extended by the boundary rule, convolved in 'valid' mode
    and returned at the original size; the adjoint reverses the chain
    (full-mode convolution followed by the extension's transpose, which is a
    crop for zero padding and an edge fold-back for replication).
    """

    def __init__(self, model: BlurModel):
        self.model = model
        self.kernel = np.asarray(model.kernel, dtype=float)
        self.pr = self.kernel.shape[0] // 2
        self.pc = self.kernel.shape[1] // 2
        rows, cols = model.image_dims
        if model.boundary == REPLICATE:
            ri = np.clip(np.arange(-self.pr, rows + self.pr), 0, rows - 1)
            ci = np.clip(np.arange(-self.pc, cols + self.pc), 0, cols - 1)
            self._row_idx, self._col_idx = np.meshgrid(ri, ci, indexing="ij")

    def _to_image(self, w: np.ndarray) -> np.ndarray:
        return np.asarray(w, dtype=float).reshape(self.model.image_dims)

    def apply(self, w: np.ndarray) -> np.ndarray:
        img = self._to_image(w)
        mode = "constant" if self.model.boundary == ZERO_PAD else "edge"
        padded = np.pad(img, ((self.pr, self.pr), (self.pc, self.pc)), mode=mode)
        return convolve2d(padded, self.kernel, mode="valid").ravel()

    def adjoint(self, u: np.ndarray) -> np.ndarray:
        img = self._to_image(u)
        full = convolve2d(img, self.kernel, mode="full")
        rows, cols = self.model.image_dims
        if self.model.boundary == ZERO_PAD:
            return full[self.pr:self.pr + rows, self.pc:self.pc + cols].ravel()
        out = np.zeros((rows, cols))
        np.add.at(out, (self._row_idx, self._col_idx), full)
        return out.ravel()

    def normal_opnorm(self, iters: int = 50, seed: int = 0) -> float:
        """Power-iteration estimate of the largest eigenvalue of P'P."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.model.image_dims[0] * self.model.image_dims[1])
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(iters):
            u = self.adjoint(self.apply(v))
            lam = float(np.linalg.norm(u))
            if lam == 0.0:
                return 0.0
            v = u / lam
        return lam


def make_deblur_problem(model: BlurModel, observed: np.ndarray, reg: float) -> Problem:
    """Inclusion form of min |P w - e|^2 + reg * |w|_1.

    The forward operator is twice the normal-equations residual gradient
    2 * P'(P w - e); the backward step soft-thresholds at reg times the
    step size.  The Lipschitz constant is estimated by 50 power-iteration
    steps on P'P.
    """
    if reg <= 0:
        raise UsageError("reg must be positive")
    observed = np.asarray(observed, dtype=float).ravel()
    rows, cols = model.image_dims
    if observed.size != rows * cols:
        raise UsageError("observed image does not match the model dimensions")
    op = BlurOperator(model)

    def grad(w):
        return 2.0 * op.adjoint(op.apply(w) - observed)

    return Problem(
        T=MonotoneMap(grad, lipschitz=2.0 * op.normal_opnorm()),
        J=ResolventOp(lambda a, delta: soft_threshold(a, delta * reg)),
        dim=rows * cols,
        default_initials=(np.zeros(rows * cols), np.ones(rows * cols)),
        known_solution=None,
        label=f"deblur-{rows}x{cols}-{model.boundary}",
    )


def snr(reference: np.ndarray, restored: np.ndarray) -> float:
    """Signal-to-noise ratio 20*log10(|ref| / |ref - restored|) in decibels."""
    reference = np.asarray(reference, dtype=float).ravel()
    restored = np.asarray(restored, dtype=float).ravel()
    if reference.shape != restored.shape:
        raise UsageError("snr requires vectors of equal dimension")
    err = float(np.linalg.norm(reference - restored))
    if err == 0.0:
        return math.inf
    return 20.0 * math.log10(float(np.linalg.norm(reference)) / err)


def synthetic_image(rows: int = 32, cols: int = 32) -> np.ndarray:
    """Deterministic piecewise test pattern on the 0..255 gray scale."""
    img = np.zeros((rows, cols))
    img[rows // 8: rows // 2, cols // 8: cols // 2] = 200.0
    rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    disk = (rr - 0.7 * rows) ** 2 + (cc - 0.65 * cols) ** 2 <= (0.18 * rows) ** 2
    img[disk] = 150.0
    img[rows // 16: 3 * rows // 16, :] += np.linspace(0.0, 80.0, cols)
    return img.ravel()
