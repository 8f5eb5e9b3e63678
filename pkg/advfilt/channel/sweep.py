"""Monte Carlo sweep over transmit power, attacks and attenuation estimates."""
import csv
import logging
import multiprocessing as mp
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import tqdm

import advfilt.common.ops as ops
from advfilt.attacks.attack import Attack
from advfilt.attacks.key import AttackKind, AttackSpec, Scope
from advfilt.channel.link import ChannelParams, TrialResult, allocate_power, run_trial
from advfilt.common.errors import InfeasibleError
from advfilt.networks.classifier import Classifier

logger = logging.getLogger(__name__)

CSV_HEADER = (
    "tx_power_db",
    "attack_id",
    "scope",
    "alpha_hat_ratio",
    "eve_acc",
    "bob_acc",
    "n_trials",
    "seed",
    "infeasible",
)


@dataclass
class SweepAttack:
    """Keys of one attack arm.

    ``keys`` maps ``None`` to the universal key or a class id to that class's
    key; per-input arms carry a ``crafter`` run against Eve at transmit time.
    """

    attack_id: str
    scope: Scope
    kind: AttackKind
    keys: Dict[Optional[int], AttackSpec] = field(default_factory=dict)
    crafter: Optional[Attack] = None

    @classmethod
    def from_key(cls, attack_id: str, key: AttackSpec) -> "SweepAttack":
        return cls(attack_id, key.scope, key.kind, {None: key})

    @classmethod
    def from_class_keys(cls, attack_id: str, keys: Sequence[AttackSpec]) -> "SweepAttack":
        kinds = {key.kind for key in keys}
        if len(kinds) != 1:
            raise ValueError("per-class keys of '{}' mix attack kinds".format(attack_id))
        return cls(attack_id, Scope.PER_CLASS, kinds.pop(), {key.class_id: key for key in keys})

    @classmethod
    def per_input(cls, attack_id: str, crafter: Attack) -> "SweepAttack":
        return cls(attack_id, Scope.PER_INPUT, crafter.kind, crafter=crafter)

    def key_for(self, c_eve: Classifier, s: np.ndarray, k: int) -> AttackSpec:
        if self.scope == Scope.PER_INPUT:
            return self.crafter.craft_input(c_eve, s, k)
        if self.scope == Scope.PER_CLASS:
            # Bob learns which class key was used out of band
            if k not in self.keys:
                raise ValueError("no key for class {} in attack '{}'".format(k, self.attack_id))
            return self.keys[k]
        return self.keys[None]


@dataclass(frozen=True)
class SweepGrid:
    tx_power_db: Sequence[float]
    noise_power_db: float = 5.0
    snr_min_db: float = 0.0
    alpha: float = 1.0
    alpha_hat_ratios: Sequence[float] = (1.0,)
    trials: int = 500
    seed: int = 0

    def __post_init__(self):
        if len(self.tx_power_db) == 0 or len(self.alpha_hat_ratios) == 0:
            raise ValueError("sweep grid is empty")
        if self.trials < 1:
            raise ValueError("need at least one trial per grid point, got {}".format(self.trials))


@dataclass(frozen=True)
class ResultRow:
    tx_power_db: float
    attack_id: str
    scope: str
    alpha_hat_ratio: float
    eve_acc: Optional[float]
    bob_acc: Optional[float]
    n_trials: int
    seed: int
    infeasible: bool = False

    def csv_fields(self) -> Tuple[str, ...]:
        def acc(value):
            return "" if value is None else "{:.6f}".format(value)

        return (
            "{:g}".format(self.tx_power_db),
            self.attack_id,
            self.scope,
            "{:g}".format(self.alpha_hat_ratio),
            acc(self.eve_acc),
            acc(self.bob_acc),
            str(self.n_trials),
            str(self.seed),
            str(int(self.infeasible)),
        )


def trial_seeds(master: int, point: int, trial: int) -> Tuple[int, int]:
    """(example choice, channel noise) seeds; independent of attack and alpha_hat."""
    example_seed, noise_seed = ops.derive_seed(master, point, trial).generate_state(2, np.uint64)
    return int(example_seed), int(noise_seed)


def class_macro(correct: np.ndarray, labels: np.ndarray) -> float:
    """Macro-averaged accuracy over the classes that occur in ``labels``."""
    return float(np.mean([np.mean(correct[labels == k]) for k in np.unique(labels)]))


@dataclass(frozen=True)
class _Context:
    c_eve: Classifier
    c_bob: Classifier
    signals: np.ndarray
    labels: np.ndarray
    num_classes: int
    grid: SweepGrid


_worker_context: Optional[_Context] = None


def _init_worker(context: _Context):
    global _worker_context
    _worker_context = context


def _pick_example(context: _Context, trial: int, example_seed: int) -> Tuple[np.ndarray, int]:
    k = trial % context.num_classes
    members = np.flatnonzero(context.labels == k)
    if members.size == 0:
        raise ValueError("test set has no examples of class {}".format(k))
    index = members[ops.make_rng(example_seed).integers(members.size)]
    return context.signals[index], k


def evaluate_point(
    context: _Context, point: int, tx_power_db: float, arm: SweepAttack, ratio: float
) -> ResultRow:
    grid = context.grid
    p = ChannelParams.from_db(tx_power_db, grid.noise_power_db, grid.snr_min_db, grid.alpha, ratio)
    row = dict(
        tx_power_db=tx_power_db,
        attack_id=arm.attack_id,
        scope=arm.scope.name.lower(),
        alpha_hat_ratio=ratio,
        seed=grid.seed,
    )
    try:
        allocate_power(p, arm.kind)
    except InfeasibleError as err:
        logger.warning("%s at %g dB marked infeasible: %s", arm.attack_id, tx_power_db, err)
        return ResultRow(eve_acc=None, bob_acc=None, n_trials=0, infeasible=True, **row)

    results: List[TrialResult] = []
    labels = np.empty(grid.trials, dtype=np.int64)
    for trial in range(grid.trials):
        example_seed, noise_seed = trial_seeds(grid.seed, point, trial)
        s, k = _pick_example(context, trial, example_seed)
        key = arm.key_for(context.c_eve, s, k)
        labels[trial] = k
        results.append(run_trial(context.c_eve, context.c_bob, s, k, key, p, noise_seed, arm.attack_id))
    diverged = sum(result.diverged for result in results)
    if diverged:
        logger.warning("%s at %g dB: Bob's inverse diverged in %d trials", arm.attack_id, tx_power_db, diverged)
    return ResultRow(
        eve_acc=class_macro(np.array([r.eve_correct for r in results]), labels),
        bob_acc=class_macro(np.array([r.bob_correct for r in results]), labels),
        n_trials=grid.trials,
        **row
    )


def _evaluate_task(task) -> ResultRow:
    return evaluate_point(_worker_context, *task)


def run_sweep(
    c_eve: Classifier,
    c_bob: Classifier,
    signals: np.ndarray,
    labels: np.ndarray,
    arms: Sequence[SweepAttack],
    grid: SweepGrid,
    num_workers: int = 1,
) -> List[ResultRow]:
    """One row per (tx power, attack, alpha_hat ratio), in that nesting order.

    Trial seeds depend on the master seed, the tx power index and the trial
    index only, so every arm sees the same signals and noise draws and the
    table does not depend on ``num_workers``.
    """
    if len(arms) == 0:
        raise ValueError("sweep needs at least one attack")
    context = _Context(
        c_eve, c_bob, np.asarray(signals), np.asarray(labels), c_eve.num_classes, grid
    )
    tasks = [
        (point, tx_power_db, arm, ratio)
        for point, tx_power_db in enumerate(grid.tx_power_db)
        for arm in arms
        for ratio in grid.alpha_hat_ratios
    ]
    logger.info(
        "sweeping %d grid points x %d trials (snr_min %g dB, %d workers)",
        len(tasks), grid.trials, grid.snr_min_db, num_workers,
    )
    if num_workers <= 1:
        _init_worker(context)
        return [_evaluate_task(task) for task in tqdm.tqdm(tasks, desc="sweep")]
    with mp.Pool(num_workers, initializer=_init_worker, initargs=(context,)) as pool:
        return list(tqdm.tqdm(pool.imap(_evaluate_task, tasks), total=len(tasks), desc="sweep"))


def write_csv(rows: Sequence[ResultRow], path: str):
    with open(path, "w", newline="") as csv_file:
        writer = csv.writer(csv_file, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow(row.csv_fields())
