"""Neural insight ranker: feature encoders, key-value memory, MLP scorer.

An insight is encoded as the sum of four d-vectors (significance, type,
subspace sequence, header semantics).  The memory variant attends over all
insights of the table with the header-semantics vector as both key and
query, and scores the attention-weighted sum.  Training minimizes the summed
squared error against the weak-supervision gold scores, one table per step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import AdamState, Tape, Tensor, adam_step
from .errors import ConfigError, DataError
from .insights import Insight, InsightType
from .metrics import RankingPair, ndcg_at_k
from .textsim import LabeledInsight, tokenize

__all__ = [
    "ModelConfig",
    "Vocabulary",
    "Ranker",
    "init_params",
    "memory_read",
    "train",
    "save_model",
    "load_model",
]

VARIANTS = ("memory", "semantics", "cnn")

TYPE_TOKENS = {
    InsightType.POINT_OUTSTANDING: "<type:point_outstanding>",
    InsightType.SHAPE_INCREASING: "<type:shape_increasing>",
    InsightType.SHAPE_DECREASING: "<type:shape_decreasing>",
}


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 64
    filters: int = 64
    window: int = 3
    seq_len: int = 16
    hidden: int = 64
    variant: str = "memory"
    lr: float = 3e-4
    init_scale: float = 0.1
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0
    val_k: int = 5
    # Stub switch for a softmax-normalized list loss; not enabled by default.
    listwise_softmax: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown model variant {self.variant!r}")
        if self.listwise_softmax:
            raise ConfigError("listwise_softmax loss is a stub and not implemented")


class Vocabulary:
    """Dense token -> index map over header tokens plus the type tokens."""

    def __init__(self, tokens):
        seen = dict.fromkeys(TYPE_TOKENS.values())
        for tok in tokens:
            seen.setdefault(tok, None)
        self._index = {tok: i for i, tok in enumerate(seen)}

    @classmethod
    def from_insights(cls, insights) -> "Vocabulary":
        tokens = []
        for ins in insights:
            for cell in ins.subspace.cells:
                for label in cell.dims:
                    tokens.extend(tokenize(label))
        return cls(sorted(set(tokens)))

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise DataError(f"token {token!r} not in vocabulary") from None

    def tokens(self) -> list[str]:
        return list(self._index)

    def bag(self, tokens) -> np.ndarray:
        """Bag-of-words count vector; out-of-vocabulary tokens are dropped."""
        out = np.zeros(len(self._index), dtype=np.float64)
        for tok in tokens:
            idx = self._index.get(tok)
            if idx is not None:
                out[idx] += 1.0
        return out


def init_params(vocab_size: int, config: ModelConfig, rng: np.random.Generator):
    """All learnable tensors, initialized uniformly on [-init_scale, init_scale]."""
    d, F, r, H = config.embed_dim, config.filters, config.window, config.hidden

    def uniform(*shape):
        return Tensor(
            rng.uniform(-config.init_scale, config.init_scale, size=shape),
            requires_grad=True,
        )

    return {
        "A": uniform(d, vocab_size),
        "w_sig": uniform(d, 1),
        "b_sig": uniform(d, 1),
        "conv_w": uniform(F, r),
        "conv_b": uniform(F, 1),
        "proj_sub": uniform(d, F),
        "mlp_w1": uniform(H, d),
        "mlp_b1": uniform(H, 1),
        "mlp_w2": uniform(1, H),
        "mlp_b2": uniform(1, 1),
    }


@dataclass
class EncodedInsight:
    f_sig: Tensor
    f_type: Tensor
    f_subspace: Tensor
    f_semantics: Tensor
    combined: Tensor
    key: Tensor


@dataclass(frozen=True)
class _Features:
    """Static per-insight inputs, precomputed once per insight."""

    significance: float
    type_index: int
    sequence: np.ndarray
    bag: np.ndarray


def _normalized_sequence(values, seq_len: int) -> np.ndarray:
    """Z-score within the subspace, truncated from the left / zero padded."""
    arr = np.asarray(values, dtype=np.float64)
    std = arr.std()
    arr = np.zeros_like(arr) if std == 0.0 else (arr - arr.mean()) / std
    if len(arr) > seq_len:
        arr = arr[-seq_len:]
    elif len(arr) < seq_len:
        arr = np.concatenate([np.zeros(seq_len - len(arr)), arr])
    return arr


def memory_read(query: Tensor, keys: list[Tensor], values: list[Tensor]) -> Tensor:
    """Softmax attention over key inner products; weighted sum of values.

    query, keys and values are d-column vectors; the result is a d-column
    vector.  The current insight's own slot is expected to be present.
    """
    if not keys or len(keys) != len(values):
        raise DataError("memory must be non-empty with aligned keys and values")
    key_matrix = ad.concat_rows([ad.transpose(k) for k in keys])  # (M, d)
    value_matrix = ad.concat_rows([ad.transpose(v) for v in values])  # (M, d)
    logits = ad.matmul(key_matrix, query)  # (M, 1)
    attention = ad.softmax(ad.transpose(logits))  # (1, M)
    return ad.transpose(ad.matmul(attention, value_matrix))  # (d, 1)


class Ranker:
    """Forward model over one table's insights, for a fixed parameter set."""

    def __init__(self, params: dict[str, Tensor], vocab: Vocabulary, config: ModelConfig):
        self.params = params
        self.vocab = vocab
        self.config = config
        self._feature_cache: dict[str, _Features] = {}

    def _features(self, ins: Insight) -> _Features:
        cached = self._feature_cache.get(ins.id)
        if cached is not None:
            return cached
        tokens = []
        for cell in ins.subspace.cells:
            for label in cell.dims:
                tokens.extend(tokenize(label))
        feats = _Features(
            significance=ins.significance,
            type_index=self.vocab.index(TYPE_TOKENS[ins.itype]),
            sequence=_normalized_sequence(ins.subspace.values, self.config.seq_len),
            bag=self.vocab.bag(tokens),
        )
        self._feature_cache[ins.id] = feats
        return feats

    def encode_significance(self, value: float) -> Tensor:
        v = Tensor([[value]])
        return ad.add(ad.matmul(self.params["w_sig"], v), self.params["b_sig"])

    def encode_type(self, type_index: int) -> Tensor:
        onehot = np.zeros((len(self.vocab), 1))
        onehot[type_index, 0] = 1.0
        return ad.matmul(self.params["A"], Tensor(onehot))

    def encode_subspace(self, sequence: np.ndarray) -> Tensor:
        pooled = ad.conv1d_encode(
            Tensor(sequence), self.params["conv_w"], self.params["conv_b"]
        )
        return ad.matmul(self.params["proj_sub"], pooled)

    def encode_semantics(self, bag: np.ndarray) -> Tensor:
        return ad.matmul(self.params["A"], Tensor(bag))

    def encode(self, ins: Insight) -> EncodedInsight:
        feats = self._features(ins)
        f_sig = self.encode_significance(feats.significance)
        f_type = self.encode_type(feats.type_index)
        f_subspace = self.encode_subspace(feats.sequence)
        f_semantics = self.encode_semantics(feats.bag)
        if self.config.variant == "cnn":
            combined = ad.add(ad.add(f_sig, f_type), f_subspace)
        else:
            combined = ad.add(ad.add(f_sig, f_type), ad.add(f_subspace, f_semantics))
        return EncodedInsight(
            f_sig=f_sig,
            f_type=f_type,
            f_subspace=f_subspace,
            f_semantics=f_semantics,
            combined=combined,
            key=f_semantics,
        )

    def score_vector(self, o: Tensor) -> Tensor:
        hidden = ad.tanh(
            ad.add(ad.matmul(self.params["mlp_w1"], o), self.params["mlp_b1"])
        )
        return ad.sigmoid(
            ad.add(ad.matmul(self.params["mlp_w2"], hidden), self.params["mlp_b2"])
        )

    def table_scores(self, insights: list[Insight]) -> list[Tensor]:
        """Model score (1x1 tensor) for every insight of one table."""
        if not insights:
            raise DataError("table_scores on an empty insight list")
        encoded = [self.encode(ins) for ins in insights]
        if self.config.variant == "memory":
            keys = [e.key for e in encoded]
            values = [e.combined for e in encoded]
            outputs = [memory_read(e.key, keys, values) for e in encoded]
        else:
            outputs = [e.combined for e in encoded]
        return [self.score_vector(o) for o in outputs]

    def table_loss(self, labeled: list[LabeledInsight]) -> Tensor:
        """0.5 * sum over the table of (model score - gold score)^2."""
        if not labeled:
            raise DataError("table_loss on an empty table")
        scores = self.table_scores([lab.insight for lab in labeled])
        preds = ad.concat_rows(scores)
        golds = Tensor([[lab.gold_score] for lab in labeled])
        diff = ad.sub(preds, golds)
        return ad.scale(ad.sum_all(ad.mul(diff, diff)), 0.5)

    def predict_ranking(self, insights: list[Insight]) -> list[tuple[str, float, int]]:
        """(insight id, score, rank) by descending score, id tie-break."""
        scores = {
            ins.id: s.item() for ins, s in zip(insights, self.table_scores(insights))
        }
        order = sorted(scores, key=lambda i: (-scores[i], i))
        rank_of = {ins_id: rank for rank, ins_id in enumerate(order, 1)}
        return [(ins.id, scores[ins.id], rank_of[ins.id]) for ins in insights]


def _ranking_pair(ranker: Ranker, labeled: list[LabeledInsight]) -> RankingPair:
    ranked = ranker.predict_ranking([lab.insight for lab in labeled])
    predicted = tuple(i for i, _, _ in sorted(ranked, key=lambda t: t[2]))
    return RankingPair(
        table_id=labeled[0].insight.table_id,
        predicted=predicted,
        gold_scores={lab.insight.id: lab.gold_score for lab in labeled},
    )


def validation_ndcg(ranker: Ranker, tables: list[list[LabeledInsight]], k: int) -> float:
    """Mean NDCG@min(k, n) over the validation tables."""
    if not tables:
        return 0.0
    total = 0.0
    for labeled in tables:
        pair = _ranking_pair(ranker, labeled)
        total += ndcg_at_k(pair, min(k, pair.size))
    return total / len(tables)


def _clone_params(params: dict[str, Tensor]) -> dict[str, Tensor]:
    return {
        name: Tensor(t.data.copy(), requires_grad=True) for name, t in params.items()
    }


def train(
    train_tables: list[list[LabeledInsight]],
    val_tables: list[list[LabeledInsight]],
    vocab: Vocabulary,
    config: ModelConfig,
) -> tuple[dict[str, Tensor], dict]:
    """Seeded training loop: one Adam step per table, best-checkpoint keeping.

    Returns the best-validation parameters and a training log with per-epoch
    train loss and validation NDCG.
    """
    if not train_tables:
        raise DataError("training requires a non-empty train split")
    rng = np.random.default_rng(config.seed)
    params = init_params(len(vocab), config, rng)
    state = AdamState(lr=config.lr)
    ranker = Ranker(params, vocab, config)

    log = {"epochs": [], "best_epoch": 0}
    best_ndcg = validation_ndcg(ranker, val_tables, config.val_k)
    log["untrained_val_ndcg"] = best_ndcg
    best_params = _clone_params(params)
    stale = 0
    param_list = list(params.values())
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_tables))
        total_loss = 0.0
        for idx in order:
            labeled = train_tables[idx]
            with Tape() as tape:
                loss = ranker.table_loss(labeled)
                grads = tape.backward(loss, params=param_list)
            adam_step(params, grads, state)
            total_loss += loss.item()
        train_loss = total_loss / len(train_tables)
        val_score = validation_ndcg(ranker, val_tables, config.val_k)
        log["epochs"].append(
            {"epoch": epoch, "train_loss": train_loss, "val_ndcg": val_score}
        )
        if val_score > best_ndcg:
            best_ndcg = val_score
            best_params = _clone_params(params)
            log["best_epoch"] = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    log["best_val_ndcg"] = best_ndcg
    return best_params, log


def save_model(directory, params: dict[str, Tensor], vocab: Vocabulary, config: ModelConfig):
    """Checkpoint = parameter file + vocabulary file + config snapshot."""
    import os

    os.makedirs(directory, exist_ok=True)
    ad.save_params(params, os.path.join(directory, "params.npz"))
    with open(os.path.join(directory, "vocab.json"), "w", encoding="utf-8") as fh:
        json.dump(vocab.tokens(), fh)
    with open(os.path.join(directory, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(asdict(config), fh, indent=1, sort_keys=True)


def load_model(directory) -> tuple[dict[str, Tensor], Vocabulary, ModelConfig]:
    import os

    params = ad.load_params(os.path.join(directory, "params.npz"))
    with open(os.path.join(directory, "vocab.json"), encoding="utf-8") as fh:
        tokens = json.load(fh)
    with open(os.path.join(directory, "config.json"), encoding="utf-8") as fh:
        config = ModelConfig(**json.load(fh))
    vocab = Vocabulary([t for t in tokens if t not in TYPE_TOKENS.values()])
    if vocab.tokens() != tokens:
        raise DataError("vocabulary file does not round-trip")
    return params, vocab, config
