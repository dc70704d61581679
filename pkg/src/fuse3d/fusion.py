"""Attention-gated fusion of per-point image and point features.

One fusion block computes a scalar gate per point for each modality
from the concatenated features, scales each modality by its gate, and
maps the gated concatenation together with the running fused feature
through a linear output head. The per-point gates double as attention
scores for the hybrid sampler.

The analytic backward pass exists so the block's gradients can be
verified against finite differences without an autodiff framework.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError, TruncatedFile
from .geometry import PointCloud, gather_point_image_features
from .numerics import concat_cols, finite_diff_grad, linear_forward, sigmoid


@dataclass
class AAFParams:
    """Weights of one adaptive attention fusion block.

    The attention heads map the (c_img + c_pt)-wide concatenation to a
    single score per point; the output head maps the gated
    concatenation plus the previous fused feature to c_out channels.
    """

    c_img: int
    c_pt: int
    w_img_att: np.ndarray  # (c_img + c_pt, 1)
    b_img_att: np.ndarray  # (1,)
    w_pt_att: np.ndarray   # (c_img + c_pt, 1)
    b_pt_att: np.ndarray   # (1,)
    w_out: np.ndarray      # (c_img + c_pt + c_prev, c_out)
    b_out: np.ndarray      # (c_out,)

    def __post_init__(self):
        for name in ("w_img_att", "b_img_att", "w_pt_att", "b_pt_att",
                     "w_out", "b_out"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        c_cat = self.c_img + self.c_pt
        if self.w_img_att.shape != (c_cat, 1) or self.w_pt_att.shape != (c_cat, 1):
            raise DimensionMismatch(
                f"attention weights must be ({c_cat}, 1), got "
                f"{self.w_img_att.shape} and {self.w_pt_att.shape}"
            )
        if self.b_img_att.shape != (1,) or self.b_pt_att.shape != (1,):
            raise DimensionMismatch("attention biases must have shape (1,)")
        if self.w_out.ndim != 2 or self.w_out.shape[0] < c_cat:
            raise DimensionMismatch(
                f"output weights must be (>= {c_cat}, c_out), got {self.w_out.shape}"
            )
        if self.b_out.shape != (self.w_out.shape[1],):
            raise DimensionMismatch(
                f"output bias has shape {self.b_out.shape}, expected "
                f"({self.w_out.shape[1]},)"
            )

    @property
    def c_prev(self) -> int:
        return self.w_out.shape[0] - self.c_img - self.c_pt

    @property
    def c_out(self) -> int:
        return self.w_out.shape[1]


@dataclass
class AAFInput:
    """Per-point features entering one fusion block (equal row counts)."""

    f_image: np.ndarray       # (N, c_img) gathered image features
    f_point: np.ndarray       # (N, c_pt)
    f_fused_prev: np.ndarray  # (N, c_prev) running fused feature

    def __post_init__(self):
        for name in ("f_image", "f_point", "f_fused_prev"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = self.f_image.shape[0]
        if self.f_point.shape[0] != n or self.f_fused_prev.shape[0] != n:
            raise DimensionMismatch(
                "f_image, f_point, f_fused_prev must have equal row counts, "
                f"got {self.f_image.shape[0]}, {self.f_point.shape[0]}, "
                f"{self.f_fused_prev.shape[0]}"
            )


@dataclass
class AAFOutput:
    f_fused: np.ndarray   # (N, c_out)
    att_image: np.ndarray  # (N,) strictly in (0, 1)
    att_point: np.ndarray  # (N,)


@dataclass
class AAFGradients:
    """Gradients of sum(upstream * f_fused) for every weight and input."""

    w_img_att: np.ndarray
    b_img_att: np.ndarray
    w_pt_att: np.ndarray
    b_pt_att: np.ndarray
    w_out: np.ndarray
    b_out: np.ndarray
    f_image: np.ndarray
    f_point: np.ndarray
    f_fused_prev: np.ndarray


def _check_shapes(params: AAFParams, inp: AAFInput):
    if inp.f_image.shape[1] != params.c_img:
        raise DimensionMismatch(
            f"f_image has {inp.f_image.shape[1]} channels, params expect "
            f"{params.c_img}"
        )
    if inp.f_point.shape[1] != params.c_pt:
        raise DimensionMismatch(
            f"f_point has {inp.f_point.shape[1]} channels, params expect "
            f"{params.c_pt}"
        )
    if inp.f_fused_prev.shape[1] != params.c_prev:
        raise DimensionMismatch(
            f"f_fused_prev has {inp.f_fused_prev.shape[1]} channels, params "
            f"expect {params.c_prev}"
        )


def aaf_forward(params: AAFParams, inp: AAFInput) -> AAFOutput:
    """Forward pass of one fusion block.

    att_image = sigmoid(linear(f_image ++ f_point))
    att_point = sigmoid(linear(f_image ++ f_point))    (separate head)
    f_fused   = linear((f_image * att_image) ++ (f_point * att_point)
                        ++ f_fused_prev)

    where ++ is column concatenation and the gates broadcast across the
    channels of their modality. No activation follows the output head.
    """
    _check_shapes(params, inp)
    cat = concat_cols(inp.f_image, inp.f_point)
    att_i = sigmoid(linear_forward(cat, params.w_img_att, params.b_img_att))
    att_p = sigmoid(linear_forward(cat, params.w_pt_att, params.b_pt_att))
    gated = concat_cols(
        concat_cols(inp.f_image * att_i, inp.f_point * att_p),
        inp.f_fused_prev,
    )
    fused = linear_forward(gated, params.w_out, params.b_out)
    return AAFOutput(fused, att_i[:, 0], att_p[:, 0])


def aaf_backward(
    params: AAFParams, inp: AAFInput, upstream
) -> AAFGradients:
    """Analytic gradients of ``sum(upstream * f_fused)``.

    Chain rule through the output head, the gate products, and the
    sigmoid of each attention head, with respect to every parameter and
    every input feature. ``upstream`` must have shape (N, c_out).
    """
    _check_shapes(params, inp)
    up = np.asarray(upstream, dtype=np.float64)
    n = inp.f_image.shape[0]
    if up.shape != (n, params.c_out):
        raise DimensionMismatch(
            f"upstream has shape {up.shape}, expected ({n}, {params.c_out})"
        )
    ci, cp = params.c_img, params.c_pt
    cat = concat_cols(inp.f_image, inp.f_point)
    att_i = sigmoid(linear_forward(cat, params.w_img_att, params.b_img_att))
    att_p = sigmoid(linear_forward(cat, params.w_pt_att, params.b_pt_att))
    gated = concat_cols(
        concat_cols(inp.f_image * att_i, inp.f_point * att_p),
        inp.f_fused_prev,
    )

    d_gated = up @ params.w_out.T
    d_w_out = gated.T @ up
    d_b_out = up.sum(axis=0)

    d_gi = d_gated[:, :ci]
    d_gp = d_gated[:, ci:ci + cp]
    d_f_fused_prev = d_gated[:, ci + cp:]

    # product rule through the gates: each gated column is feature * gate
    d_att_i = (d_gi * inp.f_image).sum(axis=1, keepdims=True)
    d_att_p = (d_gp * inp.f_point).sum(axis=1, keepdims=True)
    d_z_i = d_att_i * att_i * (1.0 - att_i)
    d_z_p = d_att_p * att_p * (1.0 - att_p)

    d_w_img_att = cat.T @ d_z_i
    d_b_img_att = d_z_i.sum(axis=0)
    d_w_pt_att = cat.T @ d_z_p
    d_b_pt_att = d_z_p.sum(axis=0)

    d_cat = d_z_i @ params.w_img_att.T + d_z_p @ params.w_pt_att.T
    d_f_image = d_gi * att_i + d_cat[:, :ci]
    d_f_point = d_gp * att_p + d_cat[:, ci:]

    return AAFGradients(
        w_img_att=d_w_img_att,
        b_img_att=d_b_img_att,
        w_pt_att=d_w_pt_att,
        b_pt_att=d_b_pt_att,
        w_out=d_w_out,
        b_out=d_b_out,
        f_image=d_f_image,
        f_point=d_f_point,
        f_fused_prev=d_f_fused_prev,
    )


def make_fusion_input(
    cloud: PointCloud, projection, image_feature_map, f_point, f_fused_prev
) -> AAFInput:
    """Assemble a block input by gathering per-point image features.

    Invisible points contribute all-zero image rows; the point and
    previous-fused features pass through unchanged.
    """
    f_image, _ = gather_point_image_features(cloud, projection, image_feature_map)
    f_point = np.asarray(f_point, dtype=np.float64)
    f_fused_prev = np.asarray(f_fused_prev, dtype=np.float64)
    n = len(cloud)
    if f_point.shape[0] != n or f_fused_prev.shape[0] != n:
        raise DimensionMismatch(
            f"per-point arrays must have {n} rows, got "
            f"{f_point.shape[0]} and {f_fused_prev.shape[0]}"
        )
    return AAFInput(f_image, f_point, f_fused_prev)


def init_params(
    c_img: int, c_pt: int, c_prev: int, c_out: int, rng: np.random.Generator
) -> AAFParams:
    """Seeded uniform [-0.1, 0.1] initialization for tests and studies."""
    c_cat = c_img + c_pt

    def u(*shape):
        return rng.uniform(-0.1, 0.1, size=shape)

    return AAFParams(
        c_img=c_img,
        c_pt=c_pt,
        w_img_att=u(c_cat, 1),
        b_img_att=u(1),
        w_pt_att=u(c_cat, 1),
        b_pt_att=u(1),
        w_out=u(c_cat + c_prev, c_out),
        b_out=u(c_out),
    )


# Serialization layout: five little-endian uint32 channel counts
# (image, point, previous-fused, attention, output), then the weight
# arrays as row-major little-endian float64 in the order
# image-attention weights, image-attention bias, point-attention
# weights, point-attention bias, output weights, output bias.
_HEADER = struct.Struct("<5I")
_ATT_CHANNELS = 1


def save_params(params: AAFParams, path) -> None:
    """Write a parameter blob in the documented binary layout."""
    header = _HEADER.pack(
        params.c_img, params.c_pt, params.c_prev, _ATT_CHANNELS, params.c_out
    )
    blob = np.concatenate([
        params.w_img_att.reshape(-1),
        params.b_img_att,
        params.w_pt_att.reshape(-1),
        params.b_pt_att,
        params.w_out.reshape(-1),
        params.b_out,
    ]).astype("<f8")
    Path(path).write_bytes(header + blob.tobytes())


def load_params(path) -> AAFParams:
    """Read a parameter blob written by :func:`save_params`."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise TruncatedFile(f"{path}: too short for the header")
    c_img, c_pt, c_prev, c_att, c_out = _HEADER.unpack_from(data)
    if c_att != _ATT_CHANNELS:
        raise ParseError(
            f"{path}: attention channel count {c_att} unsupported "
            f"(expected {_ATT_CHANNELS})"
        )
    c_cat = c_img + c_pt
    counts = [c_cat, 1, c_cat, 1, (c_cat + c_prev) * c_out, c_out]
    expected = _HEADER.size + 8 * sum(counts)
    if len(data) != expected:
        raise TruncatedFile(
            f"{path}: {len(data)} bytes, expected {expected} for header "
            f"({c_img}, {c_pt}, {c_prev}, {c_att}, {c_out})"
        )
    flat = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    parts = np.split(flat, np.cumsum(counts)[:-1])
    return AAFParams(
        c_img=c_img,
        c_pt=c_pt,
        w_img_att=parts[0].reshape(c_cat, 1),
        b_img_att=parts[1].copy(),
        w_pt_att=parts[2].reshape(c_cat, 1),
        b_pt_att=parts[3].copy(),
        w_out=parts[4].reshape(c_cat + c_prev, c_out),
        b_out=parts[5].copy(),
    )


def relative_error(a, b, floor: float = 1e-4) -> float:
    """Max elementwise |a - b| / max(|a|, |b|, floor).

    The floor keeps the metric meaningful for near-zero entries, where
    finite differences bottom out at their own noise level (~1e-12 for
    the step sizes used here) long before a relative comparison does.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float((np.abs(a - b) / denom).max())


_GRAD_GROUPS = (
    "w_img_att", "b_img_att", "w_pt_att", "b_pt_att", "w_out", "b_out",
    "f_image", "f_point", "f_fused_prev",
)


def gradcheck(
    params: AAFParams, inp: AAFInput, upstream, eps: float = 1e-5
) -> dict[str, float]:
    """Compare the analytic backward against central finite differences.

    Perturbs each parameter and input group in turn, differentiating
    the scalar sum(upstream * f_fused), and returns the maximum
    relative error per group.
    """
    up = np.asarray(upstream, dtype=np.float64)
    analytic = aaf_backward(params, inp, up)
    input_groups = ("f_image", "f_point", "f_fused_prev")

    def loss_for(group: str):
        def loss(value):
            if group in input_groups:
                out = aaf_forward(params, replace(inp, **{group: value}))
            else:
                out = aaf_forward(replace(params, **{group: value}), inp)
            return float((up * out.f_fused).sum())

        return loss

    report = {}
    for group in _GRAD_GROUPS:
        base = getattr(inp if group in input_groups else params, group)
        numeric = finite_diff_grad(loss_for(group), base, eps=eps)
        report[group] = relative_error(getattr(analytic, group), numeric)
    return report


def run_gradcheck(
    seed: int,
    trials: int = 100,
    max_points: int = 4,
    max_channels: int = 3,
    eps: float = 1e-5,
) -> dict:
    """Gradient-check randomized small instances and summarize.

    Every trial draws sizes (N <= max_points, channels <= max_channels),
    parameters from the seeded uniform initializer, and normal features
    and upstream signal, then compares analytic and finite-difference
    gradients for every group.

    Returns a JSON-friendly report with the max relative error per
    group and overall.
    """
    rng = np.random.default_rng(seed)
    worst = {group: 0.0 for group in _GRAD_GROUPS}
    for _ in range(trials):
        n = int(rng.integers(1, max_points + 1))
        c_img, c_pt, c_prev, c_out = (
            int(rng.integers(1, max_channels + 1)) for _ in range(4)
        )
        params = init_params(c_img, c_pt, c_prev, c_out, rng)
        inp = AAFInput(
            f_image=rng.standard_normal((n, c_img)),
            f_point=rng.standard_normal((n, c_pt)),
            f_fused_prev=rng.standard_normal((n, c_prev)),
        )
        upstream = rng.standard_normal((n, c_out))
        for group, err in gradcheck(params, inp, upstream, eps=eps).items():
            worst[group] = max(worst[group], err)
    return {
        "seed": seed,
        "trials": trials,
        "max_points": max_points,
        "max_channels": max_channels,
        "eps": eps,
        "per_group_max_relative_error": worst,
        "max_relative_error": max(worst.values()),
    }
