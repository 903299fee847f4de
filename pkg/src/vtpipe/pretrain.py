"""Kinematics-grounded visuo-tactile representation learning.

A frozen per-sample visual anchor vector is aligned with a fused
tactile+kinematics embedding via a temperature-scaled contrastive loss,
plus a temporally shifted term that aligns the current anchor with the
next step's embedding. Encoders are small: a three-stage CNN over the
5x8x16 force stack, an MLP over the 19 hand parameters, and a fusion MLP
whose unit-normalized output is the tactile embedding.

Everything is plain NumPy float64 with hand-written backprop; gradients
are exact and are verified against central finite differences in the test
suite. Activations are tanh and pooling is 2x2 averaging, so the whole
network is smooth and finite-difference checks are meaningful everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BatchTooSmallError,
    MissingAnchorFeaturesError,
    NonFiniteLossError,
    ShapeMismatchError,
    ZeroVectorError,
)
from .frames import HAND_DOF, TAXEL_SHAPE, KinematicsFrame, TactileFrame

_KIN_HIDDEN = 64
_CNN_FEATURES = 64  # channels after the third convolution stage
_UNIT_TOL = 1e-6


def _param_shapes(embed_dim: int) -> dict[str, tuple[int, ...]]:
    e = embed_dim
    return {
        "conv1_w": (16, 5, 3, 3),
        "conv1_b": (16,),
        "conv2_w": (32, 16, 3, 3),
        "conv2_b": (32,),
        "conv3_w": (64, 32, 3, 3),
        "conv3_b": (64,),
        "proj_w": (e, _CNN_FEATURES),
        "proj_b": (e,),
        "kin_w1": (_KIN_HIDDEN, HAND_DOF),
        "kin_b1": (_KIN_HIDDEN,),
        "kin_w2": (e, _KIN_HIDDEN),
        "kin_b2": (e,),
        "fuse_w1": (e, 2 * e),
        "fuse_b1": (e,),
        "fuse_w2": (e, e),
        "fuse_b2": (e,),
    }


class EncoderParams:
    """Named trainable tensors for the tactile, kinematics and fusion nets."""

    def __init__(self, tensors: dict[str, np.ndarray], embed_dim: int):
        expected = _param_shapes(embed_dim)
        if set(tensors) != set(expected):
            raise ShapeMismatchError(
                f"parameter names {sorted(tensors)} != expected {sorted(expected)}"
            )
        store = {}
        for name, shape in expected.items():
            arr = np.asarray(tensors[name], dtype=np.float64)
            if arr.shape != shape:
                raise ShapeMismatchError(f"{name}: expected shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name}: non-finite values")
            store[name] = arr
        self.tensors = store
        self.embed_dim = embed_dim

    @classmethod
    def init(cls, embed_dim: int = 64, seed: int = 0) -> "EncoderParams":
        """Training initialization: Glorot weights, zero biases, and a zeroed
        fusion output layer with a constant unit bias.

        The zeroed final layer makes every initial embedding identical, so
        the first-step loss is exactly the uniform-similarity value
        ln(batch) per term and never overshoots it.
        """
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        tensors = {}
        for name, shape in _param_shapes(embed_dim).items():
            if name.endswith("_b"):
                tensors[name] = np.zeros(shape)
            else:
                fan_out, fan_in = shape[0], int(np.prod(shape[1:]))
                std = np.sqrt(2.0 / (fan_in + fan_out))
                tensors[name] = rng.normal(0.0, std, size=shape)
        tensors["fuse_w2"] = np.zeros_like(tensors["fuse_w2"])
        bias = np.zeros(embed_dim)
        bias[0] = 1.0
        tensors["fuse_b2"] = bias
        return cls(tensors, embed_dim)

    @classmethod
    def random(cls, embed_dim: int = 64, seed: int = 0, scale: float = 0.1) -> "EncoderParams":
        """Fully random parameters (all tensors, biases included); used by
        gradient checks so no layer sits at a special point."""
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        tensors = {
            name: rng.normal(0.0, scale, size=shape)
            for name, shape in _param_shapes(embed_dim).items()
        }
        return cls(tensors, embed_dim)

    def copy(self) -> "EncoderParams":
        return EncoderParams({k: v.copy() for k, v in self.tensors.items()}, self.embed_dim)

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.tensors.items()}

    def items(self):
        return self.tensors.items()

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __eq__(self, other):
        if not isinstance(other, EncoderParams):
            return NotImplemented
        return self.embed_dim == other.embed_dim and all(
            np.array_equal(v, other.tensors[k]) for k, v in self.tensors.items()
        )


# --------------------------------------------------------------------------
# forward / backward primitives
# --------------------------------------------------------------------------


def _im2col3(x: np.ndarray) -> np.ndarray:
    """3x3 same-padding patch matrix: (B, C, H, W) -> (B, C*9, H*W)."""
    b, c, h, w = x.shape
    xp = np.zeros((b, c, h + 2, w + 2), dtype=x.dtype)
    xp[:, :, 1:-1, 1:-1] = x
    cols = np.empty((b, c, 9, h, w), dtype=x.dtype)
    k = 0
    for di in range(3):
        for dj in range(3):
            cols[:, :, k] = xp[:, :, di : di + h, dj : dj + w]
            k += 1
    return cols.reshape(b, c * 9, h * w)


def _col2im3(dcols: np.ndarray, c: int, h: int, w: int) -> np.ndarray:
    """Adjoint of _im2col3: accumulate patch gradients back onto the image."""
    b = dcols.shape[0]
    dcols = dcols.reshape(b, c, 9, h, w)
    dxp = np.zeros((b, c, h + 2, w + 2), dtype=dcols.dtype)
    k = 0
    for di in range(3):
        for dj in range(3):
            dxp[:, :, di : di + h, dj : dj + w] += dcols[:, :, k]
            k += 1
    return dxp[:, :, 1:-1, 1:-1]


def _conv3_forward(x, w, b):
    bsz, c, h, wd = x.shape
    cols = _im2col3(x)
    wm = w.reshape(w.shape[0], -1)
    y = np.matmul(wm, cols) + b[:, None]
    return y.reshape(bsz, w.shape[0], h, wd), cols


def _conv3_backward(dy, cols, w, x_shape):
    bsz, c, h, wd = x_shape
    co = w.shape[0]
    dyf = dy.reshape(bsz, co, h * wd)
    wm = w.reshape(co, -1)
    dw = np.einsum("bot,bct->oc", dyf, cols).reshape(w.shape)
    db = dyf.sum(axis=(0, 2))
    dcols = np.matmul(wm.T, dyf)
    dx = _col2im3(dcols, c, h, wd)
    return dx, dw, db


def _avgpool2(x):
    b, c, h, w = x.shape
    return x.reshape(b, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))


def _avgpool2_backward(dy):
    b, c, h, w = dy.shape
    return np.repeat(np.repeat(dy, 2, axis=2), 2, axis=3) * 0.25


def _linear(x, w, b):
    return x @ w.T + b


def _l2_normalize_rows(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(f, axis=1, keepdims=True)
    if np.any(norms < 1e-300):
        raise ZeroVectorError("cannot unit-normalize a zero vector")
    return f / norms, norms


def _l2_normalize_backward(dz, z, norms):
    return (dz - z * np.sum(z * dz, axis=1, keepdims=True)) / norms


def _tactile_forward(x: np.ndarray, p: EncoderParams, cache: dict | None = None) -> np.ndarray:
    y1, cols1 = _conv3_forward(x, p["conv1_w"], p["conv1_b"])
    a1 = np.tanh(y1)
    q1 = _avgpool2(a1)
    y2, cols2 = _conv3_forward(q1, p["conv2_w"], p["conv2_b"])
    a2 = np.tanh(y2)
    q2 = _avgpool2(a2)
    y3, cols3 = _conv3_forward(q2, p["conv3_w"], p["conv3_b"])
    a3 = np.tanh(y3)
    g = a3.mean(axis=(2, 3))
    fx = _linear(g, p["proj_w"], p["proj_b"])
    if cache is not None:
        cache.update(
            x_shape=x.shape, cols1=cols1, a1=a1, q1_shape=q1.shape, cols2=cols2,
            a2=a2, q2_shape=q2.shape, cols3=cols3, a3=a3, g=g,
        )
    return fx


def _tactile_backward(dfx, cache, p, grads):
    g = cache["g"]
    grads["proj_w"] += dfx.T @ g
    grads["proj_b"] += dfx.sum(axis=0)
    dg = dfx @ p["proj_w"]
    a3 = cache["a3"]
    hw = a3.shape[2] * a3.shape[3]
    da3 = np.broadcast_to((dg / hw)[:, :, None, None], a3.shape)
    dy3 = da3 * (1.0 - a3 * a3)
    dq2, dw3, db3 = _conv3_backward(dy3, cache["cols3"], p["conv3_w"], cache["q2_shape"])
    grads["conv3_w"] += dw3
    grads["conv3_b"] += db3
    da2 = _avgpool2_backward(dq2)
    dy2 = da2 * (1.0 - cache["a2"] * cache["a2"])
    dq1, dw2, db2 = _conv3_backward(dy2, cache["cols2"], p["conv2_w"], cache["q1_shape"])
    grads["conv2_w"] += dw2
    grads["conv2_b"] += db2
    da1 = _avgpool2_backward(dq1)
    dy1 = da1 * (1.0 - cache["a1"] * cache["a1"])
    _, dw1, db1 = _conv3_backward(dy1, cache["cols1"], p["conv1_w"], cache["x_shape"])
    grads["conv1_w"] += dw1
    grads["conv1_b"] += db1


def _kin_forward(h: np.ndarray, p: EncoderParams, cache: dict | None = None) -> np.ndarray:
    u = _linear(h, p["kin_w1"], p["kin_b1"])
    a = np.tanh(u)
    zh = _linear(a, p["kin_w2"], p["kin_b2"])
    if cache is not None:
        cache.update(h=h, a=a)
    return zh


def _kin_backward(dzh, cache, p, grads):
    a = cache["a"]
    grads["kin_w2"] += dzh.T @ a
    grads["kin_b2"] += dzh.sum(axis=0)
    da = dzh @ p["kin_w2"]
    du = da * (1.0 - a * a)
    grads["kin_w1"] += du.T @ cache["h"]
    grads["kin_b1"] += du.sum(axis=0)


def _fuse_forward(fx, zh, p: EncoderParams, cache: dict | None = None) -> np.ndarray:
    c = np.concatenate([fx, zh], axis=1)
    u = _linear(c, p["fuse_w1"], p["fuse_b1"])
    a = np.tanh(u)
    f = _linear(a, p["fuse_w2"], p["fuse_b2"])
    z, norms = _l2_normalize_rows(f)
    if cache is not None:
        cache.update(c=c, a=a, z=z, norms=norms)
    return z


def _fuse_backward(dz, cache, p, grads):
    e = cache["z"].shape[1]
    df = _l2_normalize_backward(dz, cache["z"], cache["norms"])
    a = cache["a"]
    grads["fuse_w2"] += df.T @ a
    grads["fuse_b2"] += df.sum(axis=0)
    da = df @ p["fuse_w2"]
    du = da * (1.0 - a * a)
    grads["fuse_w1"] += du.T @ cache["c"]
    grads["fuse_b1"] += du.sum(axis=0)
    dc = du @ p["fuse_w1"]
    return dc[:, :e], dc[:, e:]


def _embed_batch(x, h, p: EncoderParams, caches: dict | None = None) -> np.ndarray:
    """Fused embedding z for a batch: x (B,5,8,16), h (B,19) -> (B, E)."""
    tc = {} if caches is not None else None
    kc = {} if caches is not None else None
    fc = {} if caches is not None else None
    fx = _tactile_forward(x, p, tc)
    zh = _kin_forward(h, p, kc)
    z = _fuse_forward(fx, zh, p, fc)
    if caches is not None:
        caches.update(tactile=tc, kin=kc, fuse=fc)
    return z


def _embed_backward(dz, caches, p, grads):
    dfx, dzh = _fuse_backward(dz, caches["fuse"], p, grads)
    _tactile_backward(dfx, caches["tactile"], p, grads)
    _kin_backward(dzh, caches["kin"], p, grads)


# --------------------------------------------------------------------------
# public encoder operations
# --------------------------------------------------------------------------


def _tactile_array(x) -> np.ndarray:
    if isinstance(x, TactileFrame):
        x = x.forces
    x = np.asarray(x, dtype=np.float64)
    if x.shape != TAXEL_SHAPE:
        raise ShapeMismatchError(f"tactile input: expected {TAXEL_SHAPE}, got {x.shape}")
    return x


def _kin_array(h) -> np.ndarray:
    if isinstance(h, KinematicsFrame):
        h = h.dof
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (HAND_DOF,):
        raise ShapeMismatchError(f"kinematics input: expected ({HAND_DOF},), got {h.shape}")
    return h


def encode_tactile(x, params: EncoderParams) -> np.ndarray:
    """Pre-fusion tactile feature of one (denoised) frame."""
    return _tactile_forward(_tactile_array(x)[None], params)[0]


def encode_kinematics(h, params: EncoderParams) -> np.ndarray:
    """Hand-state prior vector of one kinematics frame."""
    return _kin_forward(_kin_array(h)[None], params)[0]


def fuse(fx, zh, params: EncoderParams) -> np.ndarray:
    """Fusion of (tactile features, kinematics vector), in that order,
    through the fusion MLP; output is unit-normalized."""
    fx = np.asarray(fx, dtype=np.float64)
    zh = np.asarray(zh, dtype=np.float64)
    e = params.embed_dim
    if fx.shape != (e,) or zh.shape != (e,):
        raise ShapeMismatchError(f"fuse inputs must both have shape ({e},)")
    return _fuse_forward(fx[None], zh[None], params)[0]


def encode_sample(x, h, params: EncoderParams) -> np.ndarray:
    """Full fused embedding of one (tactile, kinematics) pair."""
    return _embed_batch(_tactile_array(x)[None], _kin_array(h)[None], params)[0]


def infonce(u, v_pos, candidates, tau: float) -> float:
    """Contrastive ranking loss of the positive against a candidate set.

    Similarity is cosine; the positive must be one of the candidates. The
    log-sum-exp is max-stabilized, so extreme temperatures are safe.
    """
    if tau <= 0:
        raise ValueError(f"temperature must be > 0, got {tau}")
    u = np.asarray(u, dtype=np.float64)
    cands = np.asarray(candidates, dtype=np.float64)
    v_pos = np.asarray(v_pos, dtype=np.float64)
    if cands.ndim != 2 or cands.shape[1] != u.shape[0]:
        raise ShapeMismatchError("candidates must be (n, len(u))")
    pos_idx = None
    for j in range(cands.shape[0]):
        if np.array_equal(cands[j], v_pos):
            pos_idx = j
            break
    if pos_idx is None:
        raise ValueError("the positive vector must be a member of the candidate set")
    un = float(np.linalg.norm(u))
    cn = np.linalg.norm(cands, axis=1)
    if un < 1e-300 or np.any(cn < 1e-300):
        raise ZeroVectorError("cosine similarity undefined for zero vectors")
    sims = (cands @ u) / (cn * un)
    logits = sims / tau
    m = logits.max()
    lse = m + np.log(np.exp(logits - m).sum())
    return float(lse - logits[pos_idx])


@dataclass(frozen=True)
class PretrainConfig:
    """Hyperparameters of the contrastive pretraining stage."""

    embed_dim: int = 64
    temperature: float = 0.07
    temporal_weight: float = 0.5
    lr: float = 1e-3
    steps: int = 2000
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if self.temporal_weight < 0:
            raise ValueError("temporal_weight must be >= 0")
        if self.batch_size < 2:
            raise BatchTooSmallError("batch_size must be >= 2 for in-batch negatives")
        if self.embed_dim < 1 or self.steps < 0 or self.lr < 0:
            raise ValueError("invalid pretraining configuration")


@dataclass(frozen=True, eq=False)
class PretrainItem:
    """One training pair: frozen anchor vector plus tactile/kinematics at
    the anchor step and at the immediately following step of the same demo."""

    z_v: np.ndarray  # (embed_dim,) unit-normalized, frozen
    tactile: np.ndarray  # (5, 8, 16)
    kin: np.ndarray  # (19,)
    tactile_next: np.ndarray
    kin_next: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z_v, dtype=np.float64)
        if abs(float(np.linalg.norm(z)) - 1.0) > _UNIT_TOL:
            raise ValueError("anchor feature vector must be unit-normalized")
        z.setflags(write=False)
        object.__setattr__(self, "z_v", z)
        for name in ("tactile", "tactile_next"):
            object.__setattr__(self, name, _freeze(_check(getattr(self, name), TAXEL_SHAPE, name)))
        for name in ("kin", "kin_next"):
            object.__setattr__(self, name, _freeze(_check(getattr(self, name), (HAND_DOF,), name)))


def _check(arr, shape, name):
    arr = np.asarray(arr, dtype=np.float64)
    if arr.shape != shape:
        raise ShapeMismatchError(f"{name}: expected shape {shape}, got {arr.shape}")
    return arr


def _freeze(arr):
    arr.setflags(write=False)
    return arr


def _stack_batch(batch: list[PretrainItem]):
    zv = np.stack([it.z_v for it in batch])
    x = np.stack([it.tactile for it in batch])
    h = np.stack([it.kin for it in batch])
    xn = np.stack([it.tactile_next for it in batch])
    hn = np.stack([it.kin_next for it in batch])
    return zv, x, h, xn, hn


def _infonce_batch_term(zv, zx, tau):
    """Mean in-batch InfoNCE of rows of zv against all rows of zx, with the
    diagonal as positives. Returns (loss, dL/dzx). zv receives no gradient."""
    b = zv.shape[0]
    logits = (zv @ zx.T) / tau
    m = logits.max(axis=1, keepdims=True)
    expv = np.exp(logits - m)
    denom = expv.sum(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(denom[:, 0])
    loss = float(np.mean(lse - np.diag(logits)))
    probs = expv / denom
    dlogits = probs.copy()
    dlogits[np.arange(b), np.arange(b)] -= 1.0
    dzx = (dlogits.T @ zv) / (b * tau)
    return loss, dzx


def pretrain_loss(
    batch: list[PretrainItem], params: EncoderParams, cfg: PretrainConfig
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean combined loss over a batch and exact parameter gradients.

    The alignment term ranks each anchor against the batch's current-step
    embeddings; the temporal term ranks it against the batch's next-step
    embeddings (successors are not mixed into the alignment term's
    candidate set). Anchor vectors are frozen and get no gradient.
    """
    if len(batch) < 2:
        raise BatchTooSmallError("need at least 2 items for in-batch negatives")
    zv, x, h, xn, hn = _stack_batch(batch)
    if zv.shape[1] != params.embed_dim:
        raise ShapeMismatchError("anchor feature width != params.embed_dim")
    grads = params.zeros_like()

    caches_t = {}
    zx = _embed_batch(x, h, params, caches_t)
    loss_align, dzx = _infonce_batch_term(zv, zx, cfg.temperature)
    _embed_backward(dzx, caches_t, params, grads)

    caches_n = {}
    zx_next = _embed_batch(xn, hn, params, caches_n)
    loss_temporal, dzx_next = _infonce_batch_term(zv, zx_next, cfg.temperature)
    dzx_next *= cfg.temporal_weight
    _embed_backward(dzx_next, caches_n, params, grads)

    loss = loss_align + cfg.temporal_weight * loss_temporal
    return loss, grads


@dataclass
class TrainResult:
    params: EncoderParams
    losses: np.ndarray  # per-step loss, before the update
    config: PretrainConfig = field(repr=False, default=None)


def train(corpus: list[PretrainItem], cfg: PretrainConfig) -> TrainResult:
    """Plain fixed-rate gradient descent on the combined objective.

    Batch order is a seeded permutation per epoch, so identical
    (corpus, config) pairs give bit-identical trained parameters.
    """
    if len(corpus) < cfg.batch_size:
        raise BatchTooSmallError(
            f"corpus has {len(corpus)} items; batch_size is {cfg.batch_size}"
        )
    params = EncoderParams.init(cfg.embed_dim, cfg.seed)
    order_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xBA7C4]))
    losses = np.empty(cfg.steps, dtype=np.float64)

    per_epoch = len(corpus) // cfg.batch_size
    step = 0
    while step < cfg.steps:
        order = order_rng.permutation(len(corpus))
        for k in range(per_epoch):
            if step >= cfg.steps:
                break
            idx = order[k * cfg.batch_size : (k + 1) * cfg.batch_size]
            batch = [corpus[i] for i in idx]
            loss, grads = pretrain_loss(batch, params, cfg)
            if not np.isfinite(loss):
                raise NonFiniteLossError(
                    f"non-finite loss {loss} at step {step} (lr={cfg.lr}, "
                    f"temperature={cfg.temperature})"
                )
            losses[step] = loss
            for name, g in grads.items():
                params.tensors[name] -= cfg.lr * g
            step += 1
    return TrainResult(params=params, losses=losses, config=cfg)


def retrieval_eval(
    params: EncoderParams, eval_set: list[PretrainItem], pool_size: int | None = None
) -> float:
    """Top-1 cross-modal retrieval accuracy.

    Each anchor vector ranks all current-step embeddings in its pool by
    cosine similarity; a hit is the true pair ranking first. With
    pool_size=None the pool is the whole eval set; otherwise the set is
    split into consecutive pools of that size (remainder dropped).
    """
    if not eval_set:
        return 0.0
    zv, x, h, _, _ = _stack_batch(eval_set)
    zx = _embed_batch(x, h, params)
    n = len(eval_set)
    if pool_size is None:
        pool_size = n
    hits = 0
    total = 0
    for lo in range(0, n - pool_size + 1, pool_size):
        hi = lo + pool_size
        sims = zv[lo:hi] @ zx[lo:hi].T
        hits += int(np.sum(np.argmax(sims, axis=1) == np.arange(pool_size)))
        total += pool_size
    return hits / total


class AnchorFeatures:
    """Frozen per-anchor visual feature vectors keyed by anchor timestamp."""

    def __init__(self, times, vectors):
        times = np.asarray(times, dtype=np.int64)
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != times.shape[0]:
            raise ShapeMismatchError("vectors must be (len(times), embed_dim)")
        norms = np.linalg.norm(vectors, axis=1)
        if vectors.shape[0] and np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
            raise ValueError("anchor feature vectors must be unit-normalized")
        times.setflags(write=False)
        vectors.setflags(write=False)
        self.times = times
        self.vectors = vectors
        self._index = {int(t): i for i, t in enumerate(times)}

    def __len__(self):
        return len(self.times)

    def __contains__(self, t: int) -> bool:
        return int(t) in self._index

    @property
    def embed_dim(self) -> int:
        return self.vectors.shape[1]

    def get(self, t: int) -> np.ndarray:
        try:
            return self.vectors[self._index[int(t)]]
        except KeyError:
            raise MissingAnchorFeaturesError(
                f"no anchor features for timestamp {int(t)}"
            ) from None


def assemble_policy_input(sample, params: EncoderParams, features: AnchorFeatures) -> np.ndarray:
    """Joint observation vector [anchor, fused embedding, hand vector] for
    one synchronized sample; length is 3 * embed_dim."""
    z_v = features.get(sample.anchor_t)
    x = _tactile_array(sample.tactile)[None]
    h = _kin_array(sample.kinematics)[None]
    fx = _tactile_forward(x, params)
    zh = _kin_forward(h, params)
    z_x = _fuse_forward(fx, zh, params)
    return np.concatenate([z_v, z_x[0], zh[0]])


def corpus_from_demo(demo, features: AnchorFeatures) -> list[PretrainItem]:
    """Build consecutive-step training items from a synchronized demo.

    Item i pairs sample i (which must have anchor features) with sample
    i+1 of the same demo as its successor.
    """
    items = []
    samples = demo.samples
    for i in range(len(samples) - 1):
        cur, nxt = samples[i], samples[i + 1]
        items.append(
            PretrainItem(
                z_v=features.get(cur.anchor_t),
                tactile=cur.tactile.forces,
                kin=cur.kinematics.dof,
                tactile_next=nxt.tactile.forces,
                kin_next=nxt.kinematics.dof,
            )
        )
    return items
