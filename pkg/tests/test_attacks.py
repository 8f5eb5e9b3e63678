import numpy as np
import pytest
import torch as th

from advfilt.attacks import Attack, GradientAscentFilter, NoAttack
from advfilt.attacks.additive import fgm, fgsm
from advfilt.attacks.creation import CreationFn
from advfilt.attacks.fgfm import fgfm, fgfm_components, fgfm_jacobian_t
from advfilt.attacks.gaf import gaf_train, initial_delta
from advfilt.attacks.key import AttackKind, AttackSpec, Scope, load_attack, save_attack
from advfilt.common import dsp
from advfilt.common.errors import FormatError
from advfilt.networks.classifier import Classifier


class FlatClassifier:
    """Loss surface without slope."""

    def grad_input(self, s, k):
        return np.zeros_like(s)


def mean_loss(classifier, signals, labels, taps):
    return np.mean([classifier.loss(dsp.conv_same(s, taps), k) for s, k in zip(signals, labels)])


@pytest.mark.parametrize("method", [fgm, fgsm])
def test_additive_power_budget(small_classifier, random_signal, method):
    s = random_signal(64)
    for budget in (1e-3, 0.5, 3.0):
        spec = method(small_classifier, s, 1, budget)
        assert spec.kind == AttackKind.ADDITIVE
        assert abs(spec.power - budget) < 1e-9


@pytest.mark.parametrize("method", [fgm, fgsm])
def test_additive_zero_budget(small_classifier, random_signal, method):
    spec = method(small_classifier, random_signal(64), 0, 0.0)
    assert not np.any(spec.perturbation)


@pytest.mark.parametrize("method", [fgm, fgsm])
def test_zero_gradient_is_flagged(random_signal, method):
    spec = method(FlatClassifier(), random_signal(16), 0, 1.0)
    assert spec.zero_gradient
    assert not np.any(spec.perturbation)


@pytest.mark.parametrize("method", [fgm, fgsm])
def test_constant_network_gives_zero_gradient(layer_config, random_signal, method):
    classifier = Classifier(64, 4, layers=layer_config, seed=0)
    with th.no_grad():
        for parameter in classifier.network.parameters():
            parameter.zero_()
    spec = method(classifier, random_signal(64), 2, 1.0)
    assert spec.zero_gradient
    assert not np.any(spec.perturbation)


def test_negative_budget_rejected(small_classifier, random_signal):
    with pytest.raises(ValueError):
        fgm(small_classifier, random_signal(64), 0, -1.0)


def test_fgm_follows_gradient(small_classifier, random_signal):
    s = random_signal(64)
    grad = small_classifier.grad_input(s, 3)
    spec = fgm(small_classifier, s, 3, 1.0)
    cosine = np.real(np.vdot(grad, spec.perturbation)) / (
        np.linalg.norm(grad) * np.linalg.norm(spec.perturbation)
    )
    assert cosine == pytest.approx(1.0)


def test_fgsm_sign_structure(small_classifier, random_signal):
    spec = fgsm(small_classifier, random_signal(64), 2, 2.0)
    np.testing.assert_allclose(np.abs(spec.perturbation.real), np.abs(spec.perturbation.imag))
    np.testing.assert_allclose(np.abs(spec.perturbation), np.sqrt(2.0))


@pytest.mark.parametrize("method", [fgm, fgsm])
def test_small_additive_step_raises_loss(small_classifier, rng, method):
    increased = 0
    for _ in range(40):
        s = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        k = int(rng.integers(4))
        spec = method(small_classifier, s, k, 1e-6)
        increased += small_classifier.loss(s + spec.perturbation, k) > small_classifier.loss(s, k)
    assert increased >= 38


def test_fgfm_jacobian_rows():
    s = np.arange(1, 6, dtype=np.complex128)
    np.testing.assert_array_equal(
        fgfm_jacobian_t(s, 3), [[2, 3, 4, 5, 0], [1, 2, 3, 4, 5], [0, 1, 2, 3, 4]]
    )


def test_fgfm_epsilon_zero_is_identity(small_classifier, random_signal):
    s = random_signal(64)
    spec = fgfm(small_classifier, s, 1, 5, epsilon=0.0)
    np.testing.assert_array_equal(spec.taps, dsp.centered_unit_tap(5))
    np.testing.assert_array_equal(dsp.conv_same(s, spec.taps), s)


def test_fgfm_linearity_identity(small_classifier, rng, random_signal):
    for _ in range(10):
        s, epsilon = random_signal(64), float(rng.uniform(0.01, 5.0))
        raw, delta = fgfm_components(small_classifier, s, 0, 5, epsilon)
        deviation = dsp.conv_same(s, raw) - (s + epsilon * dsp.conv_same(s, delta))
        assert np.max(np.abs(deviation)) < 1e-10


def test_fgfm_direction_is_tap_gradient(small_classifier, random_signal):
    s = random_signal(64)
    _, delta = fgfm_components(small_classifier, s, 2, 5)
    np.testing.assert_allclose(
        delta, small_classifier.grad_taps(s, 2, dsp.centered_unit_tap(5)), atol=1e-12
    )
    _, literal = fgfm_components(small_classifier, s, 2, 5, conjugate=False)
    np.testing.assert_allclose(literal, dsp.toeplitz_same(s, 5).T @ small_classifier.grad_input(s, 2))


def test_fgfm_unit_power_and_small_step_ascent(small_classifier, random_signal):
    s = random_signal(64)
    spec = fgfm(small_classifier, s, 3, 5, epsilon=1e-4)
    assert abs(np.sum(np.abs(spec.taps) ** 2) - 1.0) < 1e-9
    assert small_classifier.loss(dsp.conv_same(s, spec.taps), 3) > small_classifier.loss(s, 3)


def test_fgfm_rejects_even_taps(small_classifier, random_signal):
    with pytest.raises(ValueError):
        fgfm(small_classifier, random_signal(64), 0, 4)
    with pytest.raises(ValueError):
        Attack.build("fgfm", taps=4)


def test_gaf_zero_epochs_returns_initial_filter(small_classifier, small_dataset):
    signals, labels = small_dataset.train()
    creation = CreationFn.build("unconstrained")
    spec = gaf_train(small_classifier, signals[:8], labels[:8], 5, creation, epochs=0, seed=11)
    expected = creation(th.view_as_complex(initial_delta(5, 11)))
    np.testing.assert_allclose(spec.taps, expected.numpy(), atol=1e-15)


def test_gaf_sgd_step_is_plain_ascent(small_classifier, small_dataset):
    signals, labels = small_dataset.train()
    signals, labels = signals[:6], labels[:6]
    creation = CreationFn.build("first_tap_constrained", beta=0.9)
    delta = initial_delta(4, 2).requires_grad_(True)
    loss = small_classifier.batch_loss(
        dsp.conv_same_th(th.from_numpy(signals), creation(th.view_as_complex(delta))),
        th.from_numpy(labels),
        "sum",
    )
    (grad,) = th.autograd.grad(loss, delta)
    expected = creation(th.view_as_complex((delta + 0.05 * grad).detach()))
    spec = gaf_train(small_classifier, signals, labels, 5, creation, epochs=1, learn_rate=0.05, seed=2)
    np.testing.assert_allclose(spec.taps, expected.numpy(), atol=1e-12)


@pytest.mark.parametrize("creation_type", ["unconstrained", "first_tap_constrained", "root_training"])
def test_gaf_output_is_power_preserving(quick_classifier, small_dataset, creation_type):
    signals, labels = small_dataset.train()
    creation = CreationFn.build(creation_type)
    spec = gaf_train(quick_classifier, signals[:16], labels[:16], 5, creation, epochs=10, seed=0)
    assert abs(np.sum(np.abs(spec.taps) ** 2) - 1.0) < 1e-9
    if creation_type != "unconstrained":
        assert spec.is_minimum_phase


def test_gaf_ascends_loss(quick_classifier, small_dataset):
    signals, labels = small_dataset.train()
    signals, labels = signals[:16], labels[:16]
    creation = CreationFn.build("root_training")
    for seed in range(10):
        initial = creation.create(th.view_as_complex(initial_delta(4, seed)).numpy())
        spec = gaf_train(quick_classifier, signals, labels, 5, creation, epochs=20, learn_rate=0.01, seed=seed)
        assert mean_loss(quick_classifier, signals, labels, spec.taps) >= mean_loss(
            quick_classifier, signals, labels, initial
        )


def test_gaf_is_deterministic(small_classifier, small_dataset):
    signals, labels = small_dataset.train()
    attack = Attack.build("gaf", taps=5, creation_type="root_training", epochs=5, seed=4)
    first = attack.craft(small_classifier, signals[:8], labels[:8])
    second = attack.craft(small_classifier, signals[:8], labels[:8])
    np.testing.assert_array_equal(first.taps, second.taps)
    assert len(attack.history) == 5


def test_gaf_rejects_unknown_optimizer(small_classifier, small_dataset):
    signals, labels = small_dataset.train()
    with pytest.raises(ValueError):
        gaf_train(small_classifier, signals[:4], labels[:4], 5, CreationFn.build("unconstrained"), optimizer="lbfgs")


@pytest.mark.parametrize("optimizer", ["adam", "adagrad", "rmsprop"])
def test_gaf_adaptive_optimizers(small_classifier, small_dataset, optimizer):
    signals, labels = small_dataset.train()
    attack = GradientAscentFilter(taps=5, epochs=3, optimizer=optimizer)
    spec = attack.craft(small_classifier, signals[:4], labels[:4], Scope.PER_CLASS, class_id=2)
    assert spec.scope == Scope.PER_CLASS and spec.class_id == 2


def test_attack_registry():
    assert set(Attack.registered_attacks) >= {"none", "fgm", "fgsm", "fgfm", "gaf"}
    assert Attack.build("fgsm").kind == AttackKind.ADDITIVE
    assert Attack.build("gaf").kind == AttackKind.FILTER
    with pytest.raises(ValueError):
        Attack.build("deepfool")


def test_no_attack_is_identity(small_classifier, small_dataset):
    signals, labels = small_dataset.train()
    spec = NoAttack().craft(small_classifier, signals, labels)
    np.testing.assert_array_equal(spec.taps, [1.0])
    assert spec.is_minimum_phase


def test_universal_fgsm_with_zero_budget(small_classifier, small_dataset):
    signals, labels = small_dataset.train()
    spec = Attack.build("fgsm", power_budget=0.0).craft(small_classifier, signals[:12], labels[:12])
    assert spec.scope == Scope.UNIVERSAL
    assert not np.any(spec.perturbation)


def test_per_class_fgm(small_classifier, small_dataset):
    signals, labels = small_dataset.train()
    members = labels == 1
    spec = Attack.build("fgm", power_budget=0.25).craft(
        small_classifier, signals[members], labels[members], Scope.PER_CLASS, class_id=1
    )
    assert spec.class_id == 1
    assert abs(spec.power - 0.25) < 1e-9


def test_attack_file_round_trip(tmp_path):
    taps = dsp.power_normalize(np.array([1.0, 0.3 - 0.2j, 0.1j]))
    for spec in (
        AttackSpec.filter(taps),
        AttackSpec.filter(taps, scope=Scope.PER_CLASS, class_id=3),
        AttackSpec.additive(np.arange(8) * (1 - 1j), scope=Scope.PER_INPUT),
    ):
        path = tmp_path / "key.afat"
        save_attack(spec, str(path))
        loaded = load_attack(str(path))
        assert (loaded.kind, loaded.scope, loaded.class_id) == (spec.kind, spec.scope, spec.class_id)
        np.testing.assert_array_equal(loaded.values, spec.values)


def test_attack_file_rejects_bad_magic(tmp_path):
    path = tmp_path / "key.afat"
    save_attack(AttackSpec.filter([1.0]), str(path))
    path.write_bytes(b"AFNN" + path.read_bytes()[4:])
    with pytest.raises(FormatError, match="magic"):
        load_attack(str(path))


def test_attack_spec_accessors():
    additive = AttackSpec.additive(np.ones(4))
    with pytest.raises(ValueError):
        additive.taps
    with pytest.raises(ValueError):
        AttackSpec.filter([1.0]).perturbation
    with pytest.raises(ValueError):
        AttackSpec.filter([1.0], scope=Scope.PER_CLASS)
    assert additive.scaled(4.0).power == pytest.approx(4.0)
