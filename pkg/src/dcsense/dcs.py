"""The CNN fusion model: assembly, training, permutation ensemble, inference.

Architecture: N_C blocks of [3x3 conv -> ReLU -> 2x2 max pool], then
flatten -> FC(F1) -> ReLU -> FC(F2) -> two-class softmax head. The input is
the (n_su, n_bands) sensing matrix with SU rows reordered by a fixed
permutation chosen during ensemble training.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace

import numpy as np

from dcsense import neural
from dcsense.dataset import Dataset, Standardizer, apply_standardizer
from dcsense.neural import AdamState, ConvParams, FcParams, SoftmaxParams
from dcsense.sensing import MODE_SD, SensingMatrix
from dcsense.streams import substream


@dataclass(frozen=True)
class ArchConfig:
    n_conv_blocks: int = 3
    conv_depths: tuple = (8, 8, 8)
    fc_widths: tuple = (8, 8)

    def __post_init__(self):
        if self.n_conv_blocks < 1:
            raise ValueError("need at least one conv block")
        if len(self.conv_depths) != self.n_conv_blocks:
            raise ValueError("conv_depths length must equal n_conv_blocks")
        if any(d < 1 for d in self.conv_depths) or any(w < 1 for w in self.fc_widths):
            raise ValueError("all depths and widths must be >= 1")
        if len(self.fc_widths) != 2:
            raise ValueError("exactly two FC widths expected")


@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 32
    lr: float = 1e-3
    n_permutations: int = 8
    validation_fraction: float = 0.2
    patience: int = 30
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.validation_fraction < 1.0):
            raise ValueError("validation_fraction must lie in (0, 1)")
        if self.n_permutations < 1:
            raise ValueError("n_permutations must be >= 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class CnnModel:
    arch: ArchConfig
    input_dims: tuple  # (n_su, n_bands)
    mode: str
    conv: list  # list[ConvParams]
    fc1: FcParams
    fc2: FcParams
    softmax: SoftmaxParams
    su_permutation: np.ndarray
    standardizer: Standardizer | None = None


def pooled_dims(input_dims: tuple, n_blocks: int) -> tuple:
    h, w = input_dims
    for _ in range(n_blocks):
        h, w = math.ceil(h / 2), math.ceil(w / 2)
    return h, w


def build_model(
    arch: ArchConfig,
    input_dims: tuple,
    rng: np.random.Generator,
    permutation: np.ndarray | None = None,
    mode: str = MODE_SD,
    standardizer: Standardizer | None = None,
) -> CnnModel:
    if input_dims[0] < 2 or input_dims[1] < 2:
        raise ValueError(f"input dims must be at least 2x2, got {input_dims}")
    h, w = pooled_dims(input_dims, arch.n_conv_blocks)
    if h < 1 or w < 1:
        raise ValueError("spatial dimensions collapse to zero before the final block")
    conv = []
    in_ch = 1
    for depth in arch.conv_depths:
        fan_in = 9 * in_ch
        conv.append(
            ConvParams(
                weights=neural.he_normal(rng, (3, 3, in_ch, depth), fan_in),
                bias=np.zeros(depth),
            )
        )
        in_ch = depth
    flat = h * w * in_ch
    f1, f2 = arch.fc_widths
    fc1 = FcParams(weights=neural.he_normal(rng, (f1, flat), flat), bias=np.zeros(f1))
    fc2 = FcParams(weights=neural.he_normal(rng, (f2, f1), f1), bias=np.zeros(f2))
    softmax = SoftmaxParams(weights=neural.he_normal(rng, (2, f2), f2))
    if permutation is None:
        permutation = np.arange(input_dims[0])
    permutation = np.asarray(permutation, dtype=int)
    if sorted(permutation.tolist()) != list(range(input_dims[0])):
        raise ValueError("su_permutation must be a permutation of the SU indices")
    return CnnModel(
        arch=arch,
        input_dims=tuple(input_dims),
        mode=mode,
        conv=conv,
        fc1=fc1,
        fc2=fc2,
        softmax=softmax,
        su_permutation=permutation,
        standardizer=standardizer,
    )


def count_parameters(model: CnnModel) -> int:
    total = 0
    for cp in model.conv:
        total += cp.weights.size + cp.bias.size
    total += model.fc1.weights.size + model.fc1.bias.size
    total += model.fc2.weights.size + model.fc2.bias.size
    total += model.softmax.weights.size
    return total


def _params_list(model: CnnModel) -> list:
    params = []
    for cp in model.conv:
        params.extend([cp.weights, cp.bias])
    params.extend([model.fc1.weights, model.fc1.bias])
    params.extend([model.fc2.weights, model.fc2.bias])
    params.append(model.softmax.weights)
    return params


def _forward_batch(model: CnnModel, xb: np.ndarray, want_cache: bool = False):
    """Probabilities for a (n, h, w, 1) batch; optionally keeps the caches."""
    caches = []
    a = xb
    for cp in model.conv:
        cols_out: list = [] if want_cache else None
        z = neural.conv3x3_forward(a, cp, _cols_out=cols_out)
        r = neural.relu_forward(z)
        pooled, pc = neural.maxpool2x2_forward(r, want_argmax=want_cache)
        if want_cache:
            caches.append((a, z, pc, cols_out[0]))
        a = pooled
    flat = a.reshape(a.shape[0], -1)
    z1 = neural.fc_forward(flat, model.fc1)
    r1 = neural.relu_forward(z1)
    z2 = neural.fc_forward(r1, model.fc2)
    logits = z2 @ model.softmax.weights.T
    probs = neural.softmax_probs(logits)
    if not want_cache:
        return probs, None
    return probs, {"caches": caches, "flat": flat, "z1": z1, "r1": r1, "z2": z2, "pooled_shape": a.shape}


def _backward_batch(model: CnnModel, cache: dict, grad_logits: np.ndarray) -> list:
    """Gradients in the same order as _params_list."""
    grad_w_soft = grad_logits.T @ cache["z2"]
    grad_z2 = grad_logits @ model.softmax.weights
    grad_r1, grad_w2, grad_b2 = neural.fc_backward(cache["r1"], model.fc2, grad_z2)
    grad_z1 = neural.relu_backward(cache["z1"], grad_r1)
    grad_flat, grad_w1, grad_b1 = neural.fc_backward(cache["flat"], model.fc1, grad_z1)
    grad_a = grad_flat.reshape(cache["pooled_shape"])
    conv_grads = []
    for cp, (a_in, z, pc, cols) in zip(reversed(model.conv), reversed(cache["caches"])):
        grad_r = neural.maxpool2x2_backward(pc, grad_a)
        grad_z = neural.relu_backward(z, grad_r)
        grad_a, grad_wc, grad_bc = neural.conv3x3_backward(a_in, cp, grad_z, _cols=cols)
        conv_grads.append((grad_wc, grad_bc))
    grads = []
    for grad_wc, grad_bc in reversed(conv_grads):
        grads.extend([grad_wc, grad_bc])
    grads.extend([grad_w1, grad_b1, grad_w2, grad_b2, grad_w_soft])
    return grads


def features_from_matrix(model: CnnModel, matrix: SensingMatrix) -> np.ndarray:
    """Standardize and row-permute one sensing matrix into model input space."""
    if matrix.mode != model.mode:
        raise ValueError(f"matrix mode {matrix.mode} does not match model mode {model.mode}")
    feats = apply_standardizer(model.standardizer, matrix)
    return feats[model.su_permutation, :]


def _dataset_tensors(model: CnnModel, ds: Dataset):
    x = np.stack([features_from_matrix(model, s.matrix) for s in ds.samples])
    return x[..., None], ds.labels()


def forward(model: CnnModel, features: np.ndarray):
    """Probability pair and decision for one standardized, pre-permuted matrix.

    Decision is H0 only when the idle probability strictly exceeds the busy
    probability; a tie conservatively declares the PU present.
    """
    if features.shape != model.input_dims:
        raise ValueError(
            f"feature shape {features.shape} does not match model input {model.input_dims}"
        )
    probs, _ = _forward_batch(model, features[None, :, :, None])
    p = probs[0]
    decision = 0 if p[0] > p[1] else 1
    return p, decision


def predict(model: CnnModel, matrix: SensingMatrix) -> int:
    _, decision = forward(model, features_from_matrix(model, matrix))
    return decision


def predict_batch(model: CnnModel, ds: Dataset) -> np.ndarray:
    x, _ = _dataset_tensors(model, ds)
    probs, _ = _forward_batch(model, x)
    return (probs[:, 1] >= probs[:, 0]).astype(int)


def _accuracy(model: CnnModel, x: np.ndarray, y: np.ndarray) -> float:
    probs, _ = _forward_batch(model, x)
    decisions = (probs[:, 1] >= probs[:, 0]).astype(int)
    return float(np.mean(decisions == y))


def _accuracy_and_loss(model: CnnModel, x: np.ndarray, y: np.ndarray):
    probs, _ = _forward_batch(model, x)
    decisions = (probs[:, 1] >= probs[:, 0]).astype(int)
    loss, _ = neural.cross_entropy(probs, y)
    return float(np.mean(decisions == y)), loss


def train(model: CnnModel, train_set: Dataset, val_set: Dataset, tc: TrainConfig):
    """Mini-batch Adam on cross-entropy with early stopping on validation
    accuracy; the model is left holding the best-validation weights."""
    if len(train_set) == 0 or len(val_set) == 0:
        raise ValueError("train and validation sets must be nonempty")
    if train_set.mode != val_set.mode:
        raise ValueError("train/validation mode mismatch")
    x_train, y_train = _dataset_tensors(model, train_set)
    x_val, y_val = _dataset_tensors(model, val_set)
    params = _params_list(model)
    adam = AdamState(lr=tc.lr)
    rng = substream(tc.seed, "shuffle")
    history = {"train_loss": [], "val_accuracy": []}
    best_acc = -1.0
    best_loss = np.inf
    best_params = [p.copy() for p in params]
    best_epoch = -1
    since_best = 0
    n = x_train.shape[0]
    for epoch in range(tc.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, tc.batch_size):
            idx = order[start : start + tc.batch_size]
            probs, cache = _forward_batch(model, x_train[idx], want_cache=True)
            loss, grad_logits = neural.cross_entropy(probs, y_train[idx])
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite training loss at epoch {epoch} (lr={tc.lr}); aborting"
                )
            grads = _backward_batch(model, cache, grad_logits)
            neural.adam_step(params, grads, adam)
            losses.append(loss)
        val_acc, val_loss = _accuracy_and_loss(model, x_val, y_val)
        history["train_loss"].append(float(np.mean(losses)))
        history["val_accuracy"].append(val_acc)
        # Accuracy on a small validation fold is coarse, so ties are broken
        # by validation loss; patience tracks accuracy improvements only.
        if val_acc > best_acc or (val_acc == best_acc and val_loss < best_loss):
            best_params = [p.copy() for p in params]
            best_epoch = epoch
            best_loss = val_loss
        if val_acc > best_acc:
            best_acc = val_acc
            since_best = 0
        else:
            since_best += 1
            if since_best >= tc.patience:
                break
    if best_epoch >= 0:
        for p, bp in zip(params, best_params):
            p[...] = bp
    history["best_epoch"] = best_epoch
    history["best_val_accuracy"] = best_acc if best_epoch >= 0 else float("nan")
    history["best_val_loss"] = best_loss if best_epoch >= 0 else float("nan")
    return model, history


def stratified_split(labels: np.ndarray, val_fraction: float, rng: np.random.Generator):
    """Per-label shuffled split into (train_idx, val_idx)."""
    train_idx, val_idx = [], []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        members = rng.permutation(members)
        n_val = max(1, int(round(len(members) * val_fraction))) if len(members) > 1 else 0
        val_idx.extend(members[:n_val].tolist())
        train_idx.extend(members[n_val:].tolist())
    return np.array(sorted(train_idx), dtype=int), np.array(sorted(val_idx), dtype=int)


def _subset(ds: Dataset, idx: np.ndarray) -> Dataset:
    return Dataset(scenario=ds.scenario, samples=[ds.samples[i] for i in idx], mode=ds.mode)


def train_permutation_ensemble(train_set: Dataset, tc: TrainConfig, arch: ArchConfig):
    """Train one model per SU-row permutation and keep the most accurate.

    The first candidate always uses the identity permutation; all candidates
    share the same stratified train/validation folds and standardizer but get
    independent initialization and shuffle streams. Ties in validation
    accuracy are broken by validation loss, then by lowest permutation index.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    from dcsense.dataset import fit_standardizer

    n_su = train_set.scenario.n_su
    standardizer = fit_standardizer(train_set) if train_set.mode == MODE_SD else None
    labels = train_set.labels()
    tr_idx, val_idx = stratified_split(labels, tc.validation_fraction, substream(tc.seed, "split"))
    tr_ds, val_ds = _subset(train_set, tr_idx), _subset(train_set, val_idx)
    perm_rng = substream(tc.seed, "perm")
    input_dims = (n_su, train_set.scenario.n_bands)
    best = None
    for i in range(tc.n_permutations):
        perm = np.arange(n_su) if i == 0 else perm_rng.permutation(n_su)
        model = build_model(
            arch,
            input_dims,
            substream(tc.seed, "init", i),
            permutation=perm,
            mode=train_set.mode,
            standardizer=standardizer,
        )
        candidate_tc = replace(tc, seed=int(substream(tc.seed, "candidate", i).integers(1 << 62)))
        model, history = train(model, tr_ds, val_ds, candidate_tc)
        history["permutation_index"] = i
        score = (history["best_val_accuracy"], -history["best_val_loss"])
        if best is None or score > best[0]:
            best = (score, model, history)
    return best[1], best[2]
