"""Image experiment: 8x8 patch pipeline, directional GMM and PSNR comparison.

Images are split into non-overlapping ``patch_size x patch_size`` blocks in
raster order.  Each block is flattened column-major and its mean is removed
and kept as side information, so every patch is treated as a zero-mean
signal.  Borders that do not fill a whole block are cropped.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .adaptive import run_adaptive
from .decoder import piecewise_decode
from .errors import PgmFormatError, ValidationError
from .gmm import GaussianModel, Gmm
from .sensing import encode, random_gaussian_matrix
from .simulation import trial_rng

PATCH_SIZE = 8

# --------------------------------------------------------------------------
# PGM I/O
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image; ``samples`` has shape ``(height, width)``."""

    samples: NDArray

    def __post_init__(self):
        s = np.asarray(self.samples)
        if s.ndim != 2:
            raise ValidationError(f"image samples must be 2-D, got shape {s.shape}")
        if s.dtype != np.uint8:
            if np.any((s < 0) | (s > 255)) or np.any(s != np.round(s)):
                raise ValidationError("image samples must be integers in [0, 255]")
            s = s.astype(np.uint8)
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def width(self) -> int:
        return self.samples.shape[1]

    @property
    def height(self) -> int:
        return self.samples.shape[0]


_TOKEN = re.compile(rb"\S+")


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Read ``count`` whitespace-separated header fields, skipping ``#`` comments.

    Returns the tokens and the offset of the single whitespace byte that ends
    the last one.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PgmFormatError("truncated header", pos)
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise PgmFormatError("unterminated comment in header", pos)
            pos = end + 1
            continue
        m = _TOKEN.match(data, pos)
        tok = m.group(0)
        if b"#" in tok:
            tok = tok[:tok.index(b"#")]
        tokens.append(tok)
        pos += len(tok)
    return tokens, pos


def parse_pgm(data: bytes) -> GrayImage:
    if data[:2] != b"P5":
        raise PgmFormatError(f"bad magic {data[:2]!r}, expected b'P5'", 0)
    tokens, pos = _header_tokens(data, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise PgmFormatError("non-numeric header field", pos) from None
    if width < 1 or height < 1:
        raise PgmFormatError(f"invalid dimensions {width}x{height}", pos)
    if maxval != 255:
        raise PgmFormatError(f"unsupported maxval {maxval}, expected 255", pos)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PgmFormatError("missing whitespace after header", pos)
    start = pos + 1
    need = width * height
    payload = data[start:start + need]
    if len(payload) < need:
        raise PgmFormatError(f"truncated payload: {len(payload)} of {need} bytes", len(data))
    samples = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(samples)


def load_pgm(path) -> GrayImage:
    return parse_pgm(Path(path).read_bytes())


def format_pgm(img: GrayImage) -> bytes:
    return b"P5\n%d %d\n255\n" % (img.width, img.height) + img.samples.tobytes()


def save_pgm(img: GrayImage, path) -> None:
    Path(path).write_bytes(format_pgm(img))


# --------------------------------------------------------------------------
# Patches
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PatchGrid:
    """Mean-removed patches of an image, one row per patch in raster order."""

    patches: NDArray
    means: NDArray
    rows_of_patches: int
    cols_of_patches: int
    patch_size: int = PATCH_SIZE

    def __len__(self) -> int:
        return self.patches.shape[0]

    def with_patches(self, patches: NDArray) -> "PatchGrid":
        return PatchGrid(np.asarray(patches, dtype=float), self.means,
                         self.rows_of_patches, self.cols_of_patches, self.patch_size)


def crop(img: GrayImage, patch_size: int = PATCH_SIZE) -> GrayImage:
    h = img.height - img.height % patch_size
    w = img.width - img.width % patch_size
    return GrayImage(img.samples[:h, :w])


def extract_patches(img: GrayImage, patch_size: int = PATCH_SIZE) -> PatchGrid:
    if img.width < patch_size or img.height < patch_size:
        raise ValidationError(
            f"image {img.width}x{img.height} is smaller than one {patch_size}x{patch_size} patch")
    p = patch_size
    pr, pc = img.height // p, img.width // p
    a = img.samples[:pr * p, :pc * p].astype(float)
    # (pr, p, pc, p) -> (pr, pc, col-in-block, row-in-block) gives column-major vectors
    blocks = a.reshape(pr, p, pc, p).transpose(0, 2, 3, 1).reshape(pr * pc, p * p)
    means = blocks.mean(axis=1)
    return PatchGrid(blocks - means[:, None], means, pr, pc, p)


def round_half_away(a: NDArray) -> NDArray:
    return np.sign(a) * np.floor(np.abs(a) + 0.5)


def reassemble(grid: PatchGrid) -> GrayImage:
    """Add means back, clamp to ``[0, 255]``, round half away from zero and tile."""
    p, pr, pc = grid.patch_size, grid.rows_of_patches, grid.cols_of_patches
    blocks = grid.patches + grid.means[:, None]
    a = blocks.reshape(pr, pc, p, p).transpose(0, 3, 1, 2).reshape(pr * p, pc * p)
    a = round_half_away(np.clip(a, 0.0, 255.0))
    return GrayImage(a.astype(np.uint8))


def psnr(a: GrayImage, b: GrayImage) -> float:
    """PSNR in dB for 8-bit images; ``inf`` when they are identical."""
    if a.samples.shape != b.samples.shape:
        raise ValidationError("images differ in size")
    diff = a.samples.astype(float) - b.samples.astype(float)
    mse = float(np.mean(diff ** 2))
    return psnr_from_mse(mse)


def psnr_from_mse(mse: float) -> float:
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


# --------------------------------------------------------------------------
# Directional GMM
# --------------------------------------------------------------------------


def _edge_patches(theta: float, count: int, patch_size: int,
                  rng: np.random.Generator) -> NDArray:
    """Blurred step edges running along angle ``theta``, with random offset, blur and contrast."""
    p = patch_size
    c = np.arange(p) - (p - 1) / 2.0
    rows, cols = np.meshgrid(c, c, indexing="ij")
    # signed distance from the edge line; theta = 0 gives a horizontal edge
    normal = (-np.sin(theta) * cols + np.cos(theta) * rows).reshape(-1, order="F")
    offset = rng.uniform(-p / 2.0, p / 2.0, size=(count, 1))
    width = rng.uniform(0.3, 1.5, size=(count, 1))
    amplitude = rng.standard_normal((count, 1))
    x = amplitude * np.tanh((normal[None, :] - offset) / width)
    x += 0.05 * rng.standard_normal(x.shape)
    return x - x.mean(axis=1, keepdims=True)


def _texture_patches(count: int, patch_size: int, rng: np.random.Generator) -> NDArray:
    """Lightly smoothed white noise, giving an isotropic low-pass covariance."""
    p = patch_size
    noise = rng.standard_normal((count, p + 2, p + 2))
    k = np.array([0.25, 0.5, 0.25])
    sm = k[0] * noise[:, :-2] + k[1] * noise[:, 1:-1] + k[2] * noise[:, 2:]
    sm = k[0] * sm[:, :, :-2] + k[1] * sm[:, :, 1:-1] + k[2] * sm[:, :, 2:]
    x = sm.transpose(0, 2, 1).reshape(count, p * p)
    return x - x.mean(axis=1, keepdims=True)


def _model_from_patches(x: NDArray, patch_size: int) -> GaussianModel:
    cov = x.T @ x / x.shape[0]
    cov = 0.5 * (cov + cov.T)
    cov *= patch_size ** 2 / np.trace(cov)
    return GaussianModel.from_covariance(cov)


def build_directional_gmm(J: int = 19, patch_size: int = PATCH_SIZE,
                          rng: np.random.Generator | None = None,
                          patches_per_model: int = 4096) -> Gmm:
    """``J - 1`` oriented-edge models at angles ``k*pi/(J-1)`` plus one texture model.

    Every covariance is an empirical second moment of synthetic mean-removed
    patches, rescaled to trace ``patch_size**2``.
    """
    if J < 2:
        raise ValidationError("J must be at least 2")
    if rng is None:
        rng = np.random.default_rng(0)
    models = []
    for k in range(J - 1):
        theta = k * np.pi / (J - 1)
        models.append(_model_from_patches(
            _edge_patches(theta, patches_per_model, patch_size, rng), patch_size))
    models.append(_model_from_patches(
        _texture_patches(patches_per_model, patch_size, rng), patch_size))
    return Gmm(models)


# --------------------------------------------------------------------------
# Experiment
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PsnrRecord:
    K: int
    psnr_adaptive: float
    psnr_standard: float


@dataclass(frozen=True, eq=False)
class PsnrReport:
    records: tuple[PsnrRecord, ...]
    M: int
    seed: int
    image_id: str = ""
    psnr_standard: float = math.nan
    reconstructions: dict = field(default_factory=dict, repr=False)

    def record(self, K: int) -> PsnrRecord:
        for r in self.records:
            if r.K == K:
                return r
        raise KeyError(K)


def _patch_rng(seed: int, index: int) -> np.random.Generator:
    return trial_rng(seed, index)


def run_image_experiment(img: GrayImage, gmm: Gmm, M: int = 16, K_list=None,
                         seed: int = 0, image_id: str = "") -> PsnrReport:
    """Compare adaptive and fully random sensing of every patch of ``img``.

    Patch ``i`` draws its random rows from a stream seeded by ``(seed, i)``;
    the adaptive run with ``K`` random rows uses the first ``K`` rows of the
    same draw as the standard run (up to row scaling, to which the decoder
    is blind).  So ``K == M`` reproduces the standard reconstruction.
    Reconstructed images are kept in ``reconstructions`` keyed by ``K`` and
    by ``"standard"``.
    """
    N = gmm.dimension
    patch_size = math.isqrt(N)
    if patch_size ** 2 != N:
        raise ValidationError(f"GMM dimension {N} is not a square patch size")
    grid = extract_patches(img, patch_size)
    if not 1 <= M <= N:
        raise ValidationError(f"need 1 <= M <= N, got M={M}")
    ks = list(range(1, M + 1)) if K_list is None else sorted(set(K_list))
    if any(not 1 <= k <= M for k in ks):
        raise ValidationError("every K must lie in 1..M")
    reference = crop(img, grid.patch_size)

    standard = np.empty_like(grid.patches)
    for i, x in enumerate(grid.patches):
        phi = random_gaussian_matrix(M, N, _patch_rng(seed, i))
        standard[i] = piecewise_decode(gmm, phi, encode(phi, x)).reconstruction
    std_img = reassemble(grid.with_patches(standard))
    psnr_std = psnr(reference, std_img)
    recon = {"standard": std_img}

    records = []
    for K in ks:
        adaptive = np.empty_like(grid.patches)
        for i, x in enumerate(grid.patches):
            result, _, _ = run_adaptive(gmm, x, M, K, _patch_rng(seed, i))
            adaptive[i] = result.reconstruction
        ad_img = reassemble(grid.with_patches(adaptive))
        recon[K] = ad_img
        records.append(PsnrRecord(K, psnr(reference, ad_img), psnr_std))
    return PsnrReport(tuple(records), M, seed, image_id, psnr_std, recon)


def stripe_image(width: int = 64, height: int = 64, theta: float = 0.0,
                 period: float = 11.0, amplitude: float = 60.0) -> GrayImage:
    """Sinusoidal stripes whose crests run along angle ``theta``."""
    r, c = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    d = -np.sin(theta) * c + np.cos(theta) * r
    a = 128.0 + amplitude * np.sin(2 * np.pi * d / period)
    return GrayImage(round_half_away(np.clip(a, 0, 255)).astype(np.uint8))
