"""Duplicate-question detection toolkit.

Model ladder over Quora-style question pairs: sparse n-gram linear models
trained with SGD, kernel SVMs on dense features, tree ensembles over 25
hand-engineered features, and neural sentence-pair models (CBOW, LSTM,
BiLSTM, with optional dot-product attention) with hand-derived gradients.
"""

__version__ = "0.1.0"
