# -*- coding: utf-8 -*-
"""scikit-learn style estimator wrapping the full pipeline, so the restorer
composes with the wider ecosystem (get_params/set_params, clone, pipelines).
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import model as M
from .dataset import SplitSpec, build_char_vocab, split_corpus
from .embeddings import EmbeddingTable
from .restore import restore_text
from .textnorm import make_sentence, normalize
from .train import TrainConfig, evaluate, train


class DiacriticsRestorer(TransformerMixin, BaseEstimator):
    """Trainable Romanian diacritics restorer.

    ``fit`` takes an iterable of correctly diacritized sentence strings (the
    labels are derived by stripping); ``predict``/``transform`` take
    diacritic-free strings and return restored ones.

    The word and sentence context paths need an ``EmbeddingTable``; pass one
    via ``embeddings`` or disable both paths for a chars-only model.
    """

    def __init__(self, char_emb_dim=20, char_lstm_h=64, hidden_sizes=(256,),
                 use_word_path=True, use_sentence_path=True, sent_lstm_h=None,
                 window=13, max_sent=31, activation="relu",
                 epochs=5, batch_size=256, lr=1e-3, weight_mode="none",
                 grad_clip=0.0, min_char_freq=1, validation_fraction=0.1,
                 embeddings=None, seed=0):
        self.char_emb_dim = char_emb_dim
        self.char_lstm_h = char_lstm_h
        self.hidden_sizes = hidden_sizes
        self.use_word_path = use_word_path
        self.use_sentence_path = use_sentence_path
        self.sent_lstm_h = sent_lstm_h
        self.window = window
        self.max_sent = max_sent
        self.activation = activation
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.weight_mode = weight_mode
        self.grad_clip = grad_clip
        self.min_char_freq = min_char_freq
        self.validation_fraction = validation_fraction
        self.embeddings = embeddings
        self.seed = seed

    def _model_config(self) -> M.ModelConfig:
        emb = self.embeddings
        if (self.use_word_path or self.use_sentence_path) and emb is None:
            raise ValueError(
                "word/sentence paths need an embeddings table; pass embeddings= "
                "or set use_word_path=False and use_sentence_path=False")
        word_dim = emb.dim if emb is not None else 1
        return M.ModelConfig(
            char_emb_dim=self.char_emb_dim,
            char_lstm_h=self.char_lstm_h,
            hidden_sizes=tuple(self.hidden_sizes),
            use_word_path=self.use_word_path,
            use_sentence_path=self.use_sentence_path,
            word_dim=word_dim,
            sent_lstm_h=self.sent_lstm_h if self.sent_lstm_h is not None else word_dim,
            window=self.window,
            max_sent=self.max_sent,
            activation=self.activation,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        """Train on diacritized sentences; a deterministic fraction is held
        out for best-epoch selection."""
        sentences = [make_sentence(normalize(s)) for s in X]
        sentences = [s for s in sentences if s.raw_text]
        if not sentences:
            raise ValueError("fit needs at least one non-empty sentence")
        dev_frac = self.validation_fraction
        spec = SplitSpec(1.0 - dev_frac, dev_frac, 0.0, seed=self.seed)
        train_set, dev_set, _ = split_corpus(sentences, spec)
        if not dev_set:  # tiny corpora: select on the training set itself
            dev_set = train_set
        if not train_set:
            train_set = dev_set

        self.vocab_ = build_char_vocab(sentences, min_freq=self.min_char_freq)
        cfg = self._model_config()
        tcfg = TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                           lr=self.lr, shuffle_seed=self.seed,
                           grad_clip=self.grad_clip, weight_mode=self.weight_mode)
        self.params_, self.log_ = train(cfg, tcfg, train_set, dev_set,
                                        self.embeddings, self.vocab_)
        return self

    def predict(self, X):
        """Restore diacritics in each input string."""
        check_is_fitted(self, "params_")
        return [restore_text(self.params_, self.vocab_, self.embeddings, text)
                for text in X]

    def transform(self, X):
        return self.predict(X)

    def score(self, X, y=None):
        """Char accuracy against the diacritized references in X."""
        check_is_fitted(self, "params_")
        sentences = [make_sentence(normalize(s)) for s in X if s.strip()]
        metrics = evaluate(self.params_, sentences, self.embeddings, self.vocab_)
        return metrics.char_acc

    def _more_tags(self):
        return {"X_types": ["string"], "non_deterministic": False}
