"""Romanian diacritics restoration with a three-path recurrent model."""

from .estimator import DiacriticsRestorer
from .textnorm import (DiacriticClass, TargetLetter, apply_mark, classify_char,
                       normalize, split_sentences, strip_diacritics, tokenize)

__version__ = "0.1.0"

__all__ = [
    "DiacriticsRestorer", "DiacriticClass", "TargetLetter", "apply_mark",
    "classify_char", "normalize", "split_sentences", "strip_diacritics",
    "tokenize", "__version__",
]
