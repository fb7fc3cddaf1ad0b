"""crossphish: cross-dataset generalizability audit for phishing URL models.

Train tabular classifiers on lexical URL features, evaluate them across
datasets, and explain the margin with interventional Shapley values so that
same-dataset and cross-dataset feature rankings can be compared.
"""

__version__ = "0.1.0"

from .errors import CrossphishError  # noqa: F401
