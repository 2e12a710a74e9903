"""Contention resolution laboratory for L-bounded products"""

__version__ = "0.3.0"
__description__ = "Online and random-order contention resolution schemes, adversarial instances and reference oracles"
