"""Masked-LM tag prediction: a closed-vocabulary tag head plus a greedy
refined-tag generation head, file-coupled to the analytics pipeline."""

__version__ = "0.1.0"
