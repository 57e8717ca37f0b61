"""Training loop, metrics, and model persistence.

The regression pairs are assembled once up front (canonical coordinates for
the symmetry model, raw concatenation for the baseline) and the regressor is
fitted with mean-squared error and Adam.  Reported metrics are always
computed in the original state coordinates by running the full one-step
prediction, so symmetry and baseline models are scored in the same space.

Determinism contract: given the same dataset, model seed and config, the
metric sequence is bit-identical (wall times excepted).  Three independent
seeds drive the run: the regressor's init seed, the train/test split seed
(derived from the dataset content hash and ``config.seed`` unless pinned via
``config.split_seed``), and ``config.seed`` for batch sampling.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .builtin import get_group
from .dataset import TransitionDataset
from .groups import TransformationGroup
from .mlp import Adam, Mlp, MlpSpec
from .models import BaselineModel, SymmetryReducedModel
from .rng import Rng, derive_seed

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
MODEL_FORMAT_VERSION = 1
METRICS_HEADER = "update,train_mse,test_mse,wall_time_s"


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite; carries the metrics recorded so far."""

    def __init__(self, message, metrics):
        super().__init__(message)
        self.metrics = metrics


class ModelFormatError(ValueError):
    """Raised for unreadable or mismatched model files."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 256
    updates: int = 10000
    eval_every: int = 250
    test_fraction: float = 0.1
    seed: int = 0
    split_seed: Optional[int] = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size <= 0 or self.updates <= 0 or self.eval_every <= 0:
            raise ValueError("batch_size, updates and eval_every must be positive")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie strictly between 0 and 1")


@dataclass
class MetricRecord:
    update_index: int
    train_mse: float
    test_mse: float
    wall_time_s: float


def train_test_split(count: int, test_fraction: float, split_seed: int):
    """Disjoint (train, test) index arrays; a pure function of its inputs."""
    if count < 2:
        raise ValueError("need at least 2 samples to split")
    n_test = min(count - 1, max(1, int(round(test_fraction * count))))
    perm = Rng(split_seed).permutation(count)
    return perm[n_test:], perm[:n_test]


def _check_model_dataset(model, dataset: TransitionDataset):
    if isinstance(model, SymmetryReducedModel):
        n, n_u = model.group.n, model.group.n_u
        what = f"group '{model.group.group_id}'"
    else:
        n, n_u = model.n, model.n_u
        what = "baseline model"
    if (n, n_u) != (dataset.n, dataset.n_u):
        raise ValueError(
            f"{what} expects n={n}, n_u={n_u} but dataset '{dataset.env_id}' "
            f"has n={dataset.n}, n_u={dataset.n_u}"
        )


def observation_mse(model, dataset: TransitionDataset, indices) -> float:
    """Mean squared one-step prediction error in original coordinates."""
    pred = model.predict(dataset.x[indices], dataset.u[indices])
    return float(np.mean((pred - dataset.x_next[indices]) ** 2))


def train(model, dataset: TransitionDataset, config: TrainConfig) -> list[MetricRecord]:
    """Fit the model's regressor; returns metric records at update 0, every
    ``eval_every`` updates, and the final update.

    Raises :class:`TrainingDivergedError` when the batch loss or an evaluation
    turns non-finite.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    _check_model_dataset(model, dataset)
    regressor = model.regressor
    sample = model.training_target(dataset.x, dataset.u, dataset.x_next)
    inputs, targets = sample.inputs, sample.targets

    split_seed = config.split_seed
    if split_seed is None:
        split_seed = derive_seed(dataset.content_hash(), config.seed)
    train_idx, test_idx = train_test_split(len(dataset), config.test_fraction, split_seed)

    batch_rng = Rng(derive_seed(config.seed, "batches"))
    adam = Adam(regressor.parameters(), lr=config.learning_rate,
                betas=ADAM_BETAS, eps=ADAM_EPS)
    records: list[MetricRecord] = []
    start = time.perf_counter()

    def record(update_index):
        try:
            train_mse = observation_mse(model, dataset, train_idx)
            test_mse = observation_mse(model, dataset, test_idx)
        except ValueError as e:
            raise TrainingDivergedError(
                f"evaluation failed at update {update_index}: {e}", records
            ) from e
        if not (np.isfinite(train_mse) and np.isfinite(test_mse)):
            raise TrainingDivergedError(
                f"non-finite evaluation error at update {update_index}", records
            )
        records.append(
            MetricRecord(update_index, train_mse, test_mse, time.perf_counter() - start)
        )

    record(0)
    n_train = len(train_idx)
    for update in range(1, config.updates + 1):
        idx = train_idx[batch_rng.integers(n_train, size=config.batch_size)]
        out, cache = regressor.forward_cached(inputs[idx])
        diff = out - targets[idx]
        loss = float(np.mean(diff * diff))
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite batch loss at update {update}", records
            )
        grads = regressor.backward(cache, (2.0 / diff.size) * diff)
        adam.step(regressor.parameters(), grads)
        if update % config.eval_every == 0 or update == config.updates:
            record(update)
    return records


# -- model construction ------------------------------------------------------


def build_symmetry_model(
    group: TransformationGroup,
    hidden_layers,
    activation: str = "relu",
    seed: int = 0,
    mode: str = "delta",
) -> SymmetryReducedModel:
    spec = MlpSpec(
        input_dim=group.b_dim + group.n_u, output_dim=group.n,
        hidden_layers=tuple(hidden_layers), activation=activation, seed=seed,
    )
    return SymmetryReducedModel(group, Mlp.from_spec(spec), mode=mode)


def build_baseline_model(
    n: int,
    n_u: int,
    hidden_layers,
    activation: str = "relu",
    seed: int = 0,
    mode: str = "delta",
) -> BaselineModel:
    spec = MlpSpec(
        input_dim=n + n_u, output_dim=n,
        hidden_layers=tuple(hidden_layers), activation=activation, seed=seed,
    )
    return BaselineModel(n, n_u, Mlp.from_spec(spec), mode=mode)


# -- persistence ---------------------------------------------------------------


def save_model(path, model, train_seed: Optional[int] = None) -> None:
    """Write a model file: one JSON header line, then the parameters as a
    raw little-endian float64 block (weights then bias, layer by layer)."""
    regressor = model.regressor
    if not isinstance(regressor, Mlp):
        raise ModelFormatError("only Mlp-backed models can be serialized")
    spec = regressor.spec
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "symmetry" if isinstance(model, SymmetryReducedModel) else "baseline",
        "group_id": model.group.group_id if isinstance(model, SymmetryReducedModel) else None,
        "n": model.output_dim,
        "n_u": model.input_dim - model.output_dim
        if isinstance(model, BaselineModel)
        else model.group.n_u,
        "mode": model.mode,
        "mlp": {
            "input_dim": spec.input_dim,
            "output_dim": spec.output_dim,
            "hidden_layers": list(spec.hidden_layers),
            "activation": spec.activation,
            "seed": spec.seed,
        },
        "seeds": {"init": spec.seed, "train": train_seed},
        "param_count": regressor.param_count,
    }
    with open(path, "wb") as f:
        f.write((json.dumps(header, sort_keys=True) + "\n").encode())
        f.write(np.ascontiguousarray(regressor.flatten_params(), dtype="<f8").tobytes())


def load_model(path, group: Union[TransformationGroup, str, None] = None):
    """Read a model file back; parameters are restored bit-exactly.

    ``group`` (an instance or id) must match the stored group id when given;
    symmetry models otherwise look their group up in the built-in registry.
    """
    with open(path, "rb") as f:
        header_line = f.readline()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"{path}: invalid model header: {e}") from e
        version = header.get("format_version")
        if version != MODEL_FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: unsupported format version {version!r} "
                f"(expected {MODEL_FORMAT_VERSION})"
            )
        raw = f.read()
    count = int(header["param_count"])
    if len(raw) != 8 * count:
        raise ModelFormatError(
            f"{path}: parameter block holds {len(raw)} bytes, expected {8 * count}"
        )
    params = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    m = header["mlp"]
    spec = MlpSpec(
        input_dim=int(m["input_dim"]), output_dim=int(m["output_dim"]),
        hidden_layers=tuple(m["hidden_layers"]), activation=m["activation"],
        seed=int(m["seed"]),
    )
    regressor = Mlp.from_spec(spec)
    regressor.load_flat_params(params)

    expected_id = group.group_id if isinstance(group, TransformationGroup) else group
    if header["kind"] == "symmetry":
        stored_id = header["group_id"]
        if expected_id is not None and expected_id != stored_id:
            raise ModelFormatError(
                f"{path}: model was trained for group '{stored_id}', "
                f"not '{expected_id}'"
            )
        grp = group if isinstance(group, TransformationGroup) else get_group(stored_id)
        return SymmetryReducedModel(grp, regressor, mode=header["mode"])
    if expected_id is not None:
        raise ModelFormatError(
            f"{path}: baseline model carries no group, but '{expected_id}' was requested"
        )
    return BaselineModel(int(header["n"]), int(header["n_u"]), regressor,
                         mode=header["mode"])


# -- metrics files -------------------------------------------------------------


def write_metrics_csv(path, records, config: Optional[dict] = None) -> None:
    """CSV with one leading comment line recording the run configuration."""
    with open(path, "w") as f:
        if config is not None:
            f.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
        f.write(METRICS_HEADER + "\n")
        for r in records:
            f.write(
                f"{r.update_index},{r.train_mse:.17g},{r.test_mse:.17g},"
                f"{r.wall_time_s:.6f}\n"
            )


def read_metrics_csv(path):
    """Returns (records, config-dict-or-None)."""
    config = None
    records = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                _, _, rest = line.partition("config:")
                if rest:
                    config = json.loads(rest)
                continue
            if line == METRICS_HEADER:
                continue
            upd, train_mse, test_mse, wall = line.split(",")
            records.append(
                MetricRecord(int(upd), float(train_mse), float(test_mse), float(wall))
            )
    return records, config
