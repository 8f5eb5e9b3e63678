import argparse
import logging
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from advfilt.attacks import Attack
from advfilt.attacks.key import AttackSpec, Scope, load_attack, save_attack
from advfilt.channel.sweep import SweepAttack, SweepGrid, run_sweep, write_csv
from advfilt.common.configuration import AttackConfig, ExperimentConfig
from advfilt.common.errors import ConfigError, DivergenceError, FormatError, InfeasibleError
from advfilt.networks.classifier import Classifier, train
from advfilt.signals.dataset import Dataset, load_dataset, make_dataset, save_dataset
from advfilt.signals.modulation import ModClass

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_DIVERGED = 5


def _ensure_parent(path: str):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def craft_subset(data: Dataset, count: int, class_id: Optional[int] = None):
    """Leading training examples: ``count`` of one class, or ``count`` spread over all classes."""
    signals, labels = data.train()
    if class_id is not None:
        members = np.flatnonzero(labels == class_id)[:count]
    else:
        per_class = -(-count // data.num_classes)
        members = np.sort(
            np.concatenate([np.flatnonzero(labels == k)[:per_class] for k in range(data.num_classes)])
        )
    if members.size == 0:
        raise ValueError("training split has no examples for crafting")
    return signals[members], labels[members]


def attack_path(attack_dir: str, attack_id: str, class_id: Optional[int] = None) -> str:
    if class_id is None:
        return os.path.join(attack_dir, "{}.afat".format(attack_id))
    return os.path.join(attack_dir, "{}_class{}.afat".format(attack_id, class_id))


def sweep_output_path(output: str, snr_min_db: float, several: bool) -> str:
    if not several:
        return output
    root, ext = os.path.splitext(output)
    return "{}_snr{:g}{}".format(root, snr_min_db, ext or ".csv")


class Runner:
    def __init__(self, argv: Sequence[str] = None):
        self._args = self._parse_arguments(argv)
        self._config = ExperimentConfig.from_yaml(self._args.config)
        self._commands = {
            "gen-data": self.gen_data,
            "train": self.train,
            "craft": self.craft,
            "sweep": self.sweep,
        }

    def start(self):
        logger.info("%s: %s", self._config.experiment_name, self._args.command)
        return self._commands[self._args.command]()

    def gen_data(self) -> str:
        cfg = self._config.dataset
        seed = cfg.seed if self._args.seed is None else self._args.seed
        path = self._args.out or cfg.path
        data = make_dataset([ModClass.from_name(name) for name in cfg.classes], cfg.per_class, cfg.length, seed)
        _ensure_parent(path)
        save_dataset(data, path)
        for mod_class, count in zip(data.classes, data.class_counts()):
            print("{}: {}".format(mod_class.name, count))
        return path

    def train(self) -> List[str]:
        cfg = self._config.classifier
        seed = cfg.seed if self._args.seed is None else self._args.seed
        data = load_dataset(self._config.dataset.path, self._config.dataset.seed)
        models = [("eve", seed, self._args.out or cfg.path)]
        if cfg.bob_path is not None:
            models.append(("bob", cfg.bob_seed, cfg.bob_path))
        written = []
        for role, model_seed, path in models:
            classifier = train(
                data,
                epochs=cfg.epochs,
                learn_rate=cfg.learn_rate,
                seed=model_seed,
                batch_size=cfg.batch_size,
                augment_snr_db=cfg.augment_snr_db,
                layers=cfg.layers,
                log_path=cfg.log_path,
                experiment_name="{}_{}".format(self._config.experiment_name, role),
            )
            _ensure_parent(path)
            classifier.save(path)
            written.append(path)
            print("{} clean macro accuracy: {:.4f}".format(role, classifier.accuracy(*data.test())))
        return written

    def craft(self) -> List[str]:
        attack_dir = self._args.out or self._config.attack_dir
        classifier = Classifier.load(self._config.classifier.path)
        data = load_dataset(self._config.dataset.path, self._config.dataset.seed)
        os.makedirs(attack_dir, exist_ok=True)
        written = []
        for cfg in self._config.attacks:
            scope = Scope.from_name(cfg.scope)
            if scope == Scope.PER_INPUT:
                logger.info("%s is crafted per input during the sweep", cfg.id)
                continue
            attack = self._build_attack(cfg)
            class_ids = range(data.num_classes) if scope == Scope.PER_CLASS else [None]
            for class_id in class_ids:
                signals, labels = craft_subset(data, cfg.craft_examples, class_id)
                spec = attack.craft(classifier, signals, labels, scope, class_id)
                path = attack_path(attack_dir, cfg.id, class_id)
                save_attack(spec, path)
                written.append(path)
                logger.info(
                    "wrote %s (%s, power %.4f, minimum phase %s)",
                    path, spec.kind.name.lower(), spec.power, spec.is_minimum_phase,
                )
        return written

    def sweep(self) -> List[str]:
        config = self._config
        seed = config.seed if self._args.seed is None else self._args.seed
        output = self._args.out or config.output
        c_eve = Classifier.load(config.classifier.path)
        c_bob = c_eve
        if config.classifier.bob_path is not None:
            c_bob = Classifier.load(config.classifier.bob_path)
            if (c_bob.input_length, c_bob.num_classes) != (c_eve.input_length, c_eve.num_classes):
                raise FormatError(
                    "{}: Bob's model shape does not match Eve's".format(config.classifier.bob_path)
                )
        data = load_dataset(config.dataset.path, config.dataset.seed)
        arms = [self._load_arm(cfg, data.num_classes) for cfg in config.attacks]
        signals, labels = data.test()
        channel = config.channel
        several = len(channel.snr_min_db) > 1
        written = []
        for snr_min_db in channel.snr_min_db:
            grid = SweepGrid(
                tx_power_db=channel.tx_power_db,
                noise_power_db=channel.noise_power_db,
                snr_min_db=snr_min_db,
                alpha=channel.alpha,
                alpha_hat_ratios=channel.alpha_hat_ratios,
                trials=config.trials,
                seed=seed,
            )
            rows = run_sweep(c_eve, c_bob, signals, labels, arms, grid, config.num_workers)
            if all(row.infeasible for row in rows):
                raise InfeasibleError(
                    "no grid point meets the {:g} dB SNR requirement".format(snr_min_db)
                )
            path = sweep_output_path(output, snr_min_db, several)
            _ensure_parent(path)
            write_csv(rows, path)
            written.append(path)
            logger.info("wrote %d rows to %s", len(rows), path)
        return written

    @staticmethod
    def _build_attack(cfg: AttackConfig) -> Attack:
        return Attack.build(cfg.attack_type, **cfg.attack_kwargs())

    def _load_arm(self, cfg: AttackConfig, num_classes: int) -> SweepAttack:
        scope = Scope.from_name(cfg.scope)
        attack_dir = self._config.attack_dir
        if scope == Scope.PER_INPUT:
            return SweepAttack.per_input(cfg.id, self._build_attack(cfg))
        if scope == Scope.PER_CLASS:
            keys: List[AttackSpec] = [
                load_attack(attack_path(attack_dir, cfg.id, k)) for k in range(num_classes)
            ]
            return SweepAttack.from_class_keys(cfg.id, keys)
        return SweepAttack.from_key(cfg.id, load_attack(attack_path(attack_dir, cfg.id)))

    @staticmethod
    def _parse_arguments(argv: Sequence[str] = None) -> argparse.Namespace:
        parser = argparse.ArgumentParser(prog="advfilt")
        parser.add_argument("command", choices=["gen-data", "train", "craft", "sweep"])
        parser.add_argument("--config", type=str, required=True)
        parser.add_argument("--out", type=str, default=None)
        parser.add_argument("--seed", type=int, default=None)
        parser.add_argument("--verbose", action="store_true")
        args = parser.parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(asctime)s %(name)s %(levelname)s: %(message)s",
        )
        return args


def main(argv: Sequence[str] = None) -> int:
    try:
        Runner(argv).start()
    except ConfigError as err:
        logger.error("configuration error: %s", err)
        return EXIT_CONFIG
    except (OSError, FormatError) as err:
        logger.error("%s", err)
        return EXIT_IO
    except InfeasibleError as err:
        logger.error("infeasible experiment: %s", err)
        return EXIT_INFEASIBLE
    except DivergenceError as err:
        logger.error("training diverged: %s", err)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
