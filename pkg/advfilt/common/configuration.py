"""YAML experiment configuration.

A config file holds a single top-level key, the experiment name, whose value
describes the dataset, the classifier, the attacks and the channel grid::

    fig4:
      dataset: {classes: [bpsk, qpsk, psk8, qam16], per_class: 500, length: 128}
      classifier: {epochs: 30, learn_rate: 0.001}
      attacks:
        - {id: rtgaf, attack_type: gaf, creation_type: root_training, taps: 5}
      channel: {tx_power_db: [5, 10, 15], noise_power_db: 5, snr_min_db: 0}
"""
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import yaml

import advfilt.common.types as t
from advfilt.common.errors import ConfigError

ATTACK_TYPES = ("none", "fgm", "fgsm", "fgfm", "gaf")
CREATION_TYPES = ("unconstrained", "first_tap_constrained", "root_training")
SCOPES = ("universal", "per_class", "per_input")
OPTIMIZERS = ("sgd", "adam", "adagrad", "rmsprop")
MOD_CLASSES = ("bpsk", "qpsk", "psk8", "qam16")


def _floats(values: Union[float, Sequence[float]]) -> List[float]:
    if isinstance(values, (int, float)):
        return [float(values)]
    return [float(v) for v in values]


@dataclass
class DatasetConfig:
    classes: List[str] = field(default_factory=lambda: list(MOD_CLASSES))
    per_class: int = 500
    length: int = 128
    seed: int = 0
    path: str = "data/dataset.afds"

    def __post_init__(self):
        self.classes = [str(name).lower() for name in self.classes]
        unknown = [name for name in self.classes if name not in MOD_CLASSES]
        if unknown or len(set(self.classes)) != len(self.classes) or len(self.classes) < 2:
            raise ConfigError("dataset classes must be at least two distinct of {}".format(MOD_CLASSES))
        if self.per_class < 3:
            raise ConfigError("dataset.per_class must be at least 3 to leave a test split")
        if self.length < 32:
            raise ConfigError("dataset.length must be at least 32 samples")


@dataclass
class ClassifierConfig:
    epochs: int = 30
    learn_rate: float = 1e-3
    seed: int = 0
    batch_size: int = 64
    augment_snr_db: float = 10.0
    path: str = "data/classifier.afnn"
    layers: Optional[List[t.TConfig]] = None
    log_path: Optional[str] = None
    # Bob's own model; Bob shares Eve's when unset
    bob_path: Optional[str] = None
    bob_seed: Optional[int] = None

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1 or self.learn_rate <= 0.0:
            raise ConfigError("classifier needs epochs >= 0, batch_size >= 1 and learn_rate > 0")
        if self.bob_seed is not None and self.bob_path is None:
            raise ConfigError("classifier.bob_seed needs classifier.bob_path")
        if self.bob_path is not None and self.bob_path == self.path:
            raise ConfigError("classifier.bob_path must differ from classifier.path")
        if self.bob_path is not None and self.bob_seed is None:
            self.bob_seed = self.seed + 1


@dataclass
class AttackConfig:
    id: str
    attack_type: str
    scope: str = "universal"
    taps: int = 5
    creation_type: str = "root_training"
    beta: Optional[float] = None
    epsilon: float = 1.0
    epochs: int = 200
    learn_rate: float = 0.05
    optimizer: str = "sgd"
    power_budget: float = 1.0
    craft_examples: int = 200
    conjugate: bool = True
    center: bool = True
    seed: int = 0
    log_path: Optional[str] = None

    def __post_init__(self):
        if self.attack_type not in ATTACK_TYPES:
            raise ConfigError("attack '{}': unknown type '{}'".format(self.id, self.attack_type))
        if self.scope not in SCOPES:
            raise ConfigError("attack '{}': unknown scope '{}'".format(self.id, self.scope))
        if self.taps < 1:
            raise ConfigError("attack '{}': taps must be positive".format(self.id))
        if self.power_budget < 0.0:
            raise ConfigError("attack '{}': power_budget must be non-negative".format(self.id))
        if self.craft_examples < 2:
            raise ConfigError("attack '{}': craft_examples must be at least 2".format(self.id))
        if self.attack_type == "fgfm" and self.taps % 2 == 0:
            raise ConfigError("attack '{}': FGFM needs an odd number of taps".format(self.id))
        if self.attack_type == "gaf":
            self._check_gaf()

    def _check_gaf(self):
        if self.creation_type not in CREATION_TYPES:
            raise ConfigError("attack '{}': unknown creation '{}'".format(self.id, self.creation_type))
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError("attack '{}': unknown optimizer '{}'".format(self.id, self.optimizer))
        if self.epochs < 0 or self.learn_rate <= 0.0:
            raise ConfigError("attack '{}': GAF needs epochs >= 0 and learn_rate > 0".format(self.id))
        if self.creation_type != "unconstrained" and self.taps < 2:
            raise ConfigError("attack '{}': constrained creation needs at least 2 taps".format(self.id))
        if self.beta is None:
            return
        if self.creation_type == "root_training" and self.beta <= 1.0:
            raise ConfigError(
                "attack '{}': root training needs beta > 1 for a stable inverse, got {}".format(
                    self.id, self.beta
                )
            )
        if self.creation_type == "first_tap_constrained" and self.beta <= 0.0:
            raise ConfigError("attack '{}': first-tap constraint needs beta > 0".format(self.id))

    def attack_kwargs(self) -> t.TConfig:
        """Constructor arguments of the registered attack class."""
        if self.attack_type == "none":
            return {}
        kwargs: t.TConfig = {"power_budget": self.power_budget, "center": self.center}
        if self.attack_type == "fgfm":
            kwargs.update(taps=self.taps, epsilon=self.epsilon, conjugate=self.conjugate)
        elif self.attack_type == "gaf":
            kwargs.update(
                taps=self.taps,
                creation_type=self.creation_type,
                beta=self.beta,
                epochs=self.epochs,
                learn_rate=self.learn_rate,
                optimizer=self.optimizer,
                seed=self.seed,
                log_path=self.log_path,
            )
        return kwargs


@dataclass
class ChannelConfig:
    tx_power_db: List[float]
    noise_power_db: float = 5.0
    snr_min_db: List[float] = field(default_factory=lambda: [0.0])
    alpha: float = 1.0
    alpha_hat_ratios: List[float] = field(default_factory=lambda: [1.0])

    def __post_init__(self):
        self.tx_power_db = _floats(self.tx_power_db)
        self.snr_min_db = _floats(self.snr_min_db)
        self.alpha_hat_ratios = _floats(self.alpha_hat_ratios)
        if not self.tx_power_db or not self.snr_min_db or not self.alpha_hat_ratios:
            raise ConfigError("channel grid is empty")
        if self.alpha <= 0.0:
            raise ConfigError("channel.alpha must be positive")


@dataclass
class ExperimentConfig:
    experiment_name: str
    dataset: DatasetConfig
    classifier: ClassifierConfig
    attacks: List[AttackConfig]
    channel: ChannelConfig
    trials: int = 500
    seed: int = 0
    num_workers: int = 1
    attack_dir: str = "results/attacks"
    output: str = "results/sweep.csv"

    def __post_init__(self):
        if not self.attacks:
            raise ConfigError("experiment '{}' lists no attacks".format(self.experiment_name))
        ids = [attack.id for attack in self.attacks]
        if len(set(ids)) != len(ids):
            raise ConfigError("attack ids must be unique, got {}".format(ids))
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.num_workers < 1:
            raise ConfigError("num_workers must be positive")

    @classmethod
    def from_dict(cls, data: t.TConfig) -> "ExperimentConfig":
        if not isinstance(data, dict) or len(data) != 1:
            raise ConfigError("config must hold exactly one top-level experiment key")
        ((name, body),) = data.items()
        if not isinstance(body, dict):
            raise ConfigError("experiment '{}' must be a mapping".format(name))
        body = dict(body)
        try:
            return cls(
                experiment_name=str(name),
                dataset=DatasetConfig(**body.pop("dataset", {})),
                classifier=ClassifierConfig(**body.pop("classifier", {})),
                attacks=[AttackConfig(**attack) for attack in body.pop("attacks", [])],
                channel=ChannelConfig(**body.pop("channel")),
                **body
            )
        except KeyError as err:
            raise ConfigError("experiment '{}' misses section {}".format(name, err))
        except TypeError as err:
            raise ConfigError("experiment '{}': {}".format(name, err))

    @classmethod
    def from_yaml(cls, path: str) -> "ExperimentConfig":
        with open(path, "r") as config_file:
            try:
                data = yaml.safe_load(config_file)
            except yaml.YAMLError as err:
                raise ConfigError("{}: {}".format(path, err))
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        body = asdict(self)
        del body["experiment_name"]
        return {self.experiment_name: body}

    def to_yaml(self, path: str):
        with open(path, "w") as config_file:
            yaml.safe_dump(self.to_dict(), config_file, sort_keys=False)

