__all__ = [
    "Attack",
    "NoAttack",
    "FastGradientMethod",
    "FastGradientSignMethod",
    "FastGradientFilterMethod",
    "GradientAscentFilter",
]

from advfilt.attacks.additive import FastGradientMethod, FastGradientSignMethod
from advfilt.attacks.attack import Attack, NoAttack
from advfilt.attacks.fgfm import FastGradientFilterMethod
from advfilt.attacks.gaf import GradientAscentFilter
