"""
Character-level attention seq2seq corrector.

A bidirectional LSTM encodes the erroneous token; an LSTM decoder with additive
attention (optionally coverage-aware) generates the correction. A copy gate
mixes the generated distribution with the attention distribution over source
characters. Training minimizes cross-entropy plus the diagonal-attention and
coverage penalties.

Shapes: B batch, N source length, T target length (EOS included), E embedding
size, H encoder hidden size per direction, D = 2H decoder hidden size, V vocab
size, V_ext vocab size plus the batch's source-only characters.
"""

# Standard library imports
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np
from dataclasses_json import dataclass_json

# Local imports
from core import numkit as nk
from core.corpus import SentencePair, split_train_dev
from core.numkit import Tape, Tensor
from core.optim import Adam, clip_by_global_norm
from utils.config import DEFAULT_DEV_FRACTION, CorrectorConfig
from utils.error_handling import (
    CheckpointError,
    ConfigError,
    DegenerateData,
    EmptyInput,
    ShapeMismatch,
)
from utils.parallel import iter_batches

PAD, SOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = ("<pad>", "<sos>", "<eos>", "<unk>")
CONTEXT_SEPARATOR = " "
MASK_PENALTY = -1e9
LOG_EPS = 1e-12

PARAMS_FILE = "params.bin"
VOCAB_FILE = "vocab.tsv"
CONFIG_FILE = "config.json"


class Vocab:
    """Character vocabulary with fixed low ids for PAD, SOS, EOS and UNK."""

    def __init__(self, chars: Sequence[str] = ()):
        self.id_to_char: List[str] = list(SPECIALS) + sorted(set(chars) - set(SPECIALS))
        self.char_to_id: Dict[str, int] = {ch: i for i, ch in enumerate(self.id_to_char)}

    @classmethod
    def build(cls, texts: Sequence[str]) -> "Vocab":
        return cls({ch for text in texts for ch in text})

    def __len__(self) -> int:
        return len(self.id_to_char)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocab) and self.id_to_char == other.id_to_char

    def ids(self, text: str) -> List[int]:
        return [self.char_to_id.get(ch, UNK) for ch in text]

    def extended_ids(self, source: str) -> Tuple[List[int], List[str]]:
        """Source ids where out-of-vocabulary characters get temporary ids from len(vocab) on."""
        oovs: List[str] = []
        ids: List[int] = []
        for ch in source:
            if ch in self.char_to_id:
                ids.append(self.char_to_id[ch])
            else:
                if ch not in oovs:
                    oovs.append(ch)
                ids.append(len(self) + oovs.index(ch))
        return ids, oovs

    def target_ids(self, target: str, oovs: Sequence[str], copy: bool) -> List[int]:
        ids = []
        for ch in target:
            if ch in self.char_to_id:
                ids.append(self.char_to_id[ch])
            elif copy and ch in oovs:
                ids.append(len(self) + list(oovs).index(ch))
            else:
                ids.append(UNK)
        return ids

    def decode(self, ids: Sequence[int], oovs: Sequence[str] = ()) -> str:
        chars = []
        for i in ids:
            if i >= len(self):
                chars.append(oovs[i - len(self)])
            elif i > UNK:
                chars.append(self.id_to_char[i])
        return "".join(chars)

    def save(self, path: str) -> None:
        lines = [f"{i}\t{ch}" for i, ch in enumerate(self.id_to_char)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str) -> "Vocab":
        try:
            lines = Path(path).read_text(encoding="utf-8").split("\n")
        except OSError as e:
            raise CheckpointError(f"Cannot read vocabulary {path}: {e}") from e
        entries = [line.split("\t", 1) for line in lines if line]
        chars = [ch for _, ch in entries]
        if chars[: len(SPECIALS)] != list(SPECIALS) or any(int(i) != n for n, (i, _) in enumerate(entries)):
            raise CheckpointError(f"{path} is not a valid vocabulary manifest")
        vocab = cls()
        vocab.id_to_char = chars
        vocab.char_to_id = {ch: i for i, ch in enumerate(chars)}
        return vocab


def parameter_shapes(vocab_size: int, config: CorrectorConfig) -> Dict[str, Tuple[int, ...]]:
    E, H = config.embedding_size, config.hidden_size
    D = 2 * H
    shapes: Dict[str, Tuple[int, ...]] = {"embedding": (vocab_size, E)}
    for direction in ("fwd", "bwd"):
        shapes[f"enc_{direction}_Wx"] = (E, 4 * H)
        shapes[f"enc_{direction}_Wh"] = (H, 4 * H)
        shapes[f"enc_{direction}_b"] = (1, 4 * H)
    shapes.update(
        {
            "dec_Wx": (E + D, 4 * D),
            "dec_Wh": (D, 4 * D),
            "dec_b": (1, 4 * D),
            "att_W1": (D, D),
            "att_W2": (D, D),
            "att_Wg": (1, D),
            "att_v": (D, 1),
            "out_W": (2 * D, vocab_size),
            "out_b": (1, vocab_size),
            "copy_wc": (D, 1),
            "copy_ws": (D, 1),
            "copy_wx": (E, 1),
            "copy_b": (1, 1),
        }
    )
    return shapes


def init_params(vocab_size: int, config: CorrectorConfig, seed: Optional[int] = None) -> Dict[str, Tensor]:
    """
    Uniform(-init_scale, init_scale) weights, zero biases except the LSTM
    forget gates, which start at 1.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    params: Dict[str, Tensor] = {}
    for name, shape in sorted(parameter_shapes(vocab_size, config).items()):
        if name.endswith("_b"):
            data = np.zeros(shape)
            if name != "copy_b" and name != "out_b":
                hidden = shape[1] // 4
                data[:, hidden : 2 * hidden] = 1.0
        else:
            data = rng.uniform(-config.init_scale, config.init_scale, size=shape)
        params[name] = Tensor(data, requires_grad=True, name=name)
    return params


@dataclass
class Batch:
    src_ids: np.ndarray
    src_mask: np.ndarray
    src_ext: np.ndarray
    dec_in: np.ndarray
    targets: np.ndarray
    tgt_mask: np.ndarray
    oovs: List[List[str]]

    @property
    def size(self) -> int:
        return self.src_ids.shape[0]

    @property
    def n_tokens(self) -> int:
        return int(self.tgt_mask.sum())

    def target_onehot(self, t: int) -> np.ndarray:
        onehot = np.zeros((self.size, self.src_ext.shape[2]))
        onehot[np.arange(self.size), self.targets[:, t]] = 1.0
        return onehot


def make_batch(pairs: Sequence[Tuple[str, str]], vocab: Vocab, copy: bool = True) -> Batch:
    """
    Pad (source, target) pairs into arrays.

    Decoder inputs are SOS followed by the gold characters (teacher forcing);
    targets are the gold characters followed by EOS.

    Raises:
        EmptyInput: If a source is empty
    """
    if any(not source for source, _ in pairs):
        raise EmptyInput("Cannot encode an empty source sequence")

    B = len(pairs)
    extended = [vocab.extended_ids(source) for source, _ in pairs]
    N = max(len(source) for source, _ in pairs)
    T = max(len(target) for _, target in pairs) + 1
    max_oov = max(len(oovs) for _, oovs in extended) if copy else 0
    V_ext = len(vocab) + max_oov

    src_ids = np.full((B, N), PAD, dtype=np.int64)
    src_mask = np.zeros((B, N))
    src_ext = np.zeros((B, N, V_ext))
    dec_in = np.full((B, T), PAD, dtype=np.int64)
    targets = np.full((B, T), PAD, dtype=np.int64)
    tgt_mask = np.zeros((B, T))

    for b, ((source, target), (ext_ids, oovs)) in enumerate(zip(pairs, extended)):
        n = len(source)
        src_ids[b, :n] = vocab.ids(source)
        src_mask[b, :n] = 1.0
        if copy:
            src_ext[b, np.arange(n), ext_ids] = 1.0
        tgt = vocab.target_ids(target, oovs, copy) + [EOS]
        targets[b, : len(tgt)] = tgt
        tgt_mask[b, : len(tgt)] = 1.0
        dec_in[b, 0] = SOS
        dec_in[b, 1 : len(tgt)] = vocab.ids(target)

    return Batch(src_ids, src_mask, src_ext, dec_in, targets, tgt_mask, [oovs for _, oovs in extended])


@dataclass
class EncoderOutput:
    states: Tensor
    proj: Tensor
    mask: np.ndarray
    final: Tuple[Tensor, Tensor]


def lstm_cell(x_proj: Tensor, h: Tensor, c: Tensor, Wh: Tensor, bias: Tensor) -> Tuple[Tensor, Tensor]:
    """One LSTM step given the input already projected by W_x; gate order i, f, g, o."""
    gates = x_proj + h @ Wh + bias
    size = h.shape[1]
    i = nk.sigmoid(nk.slice_axis(gates, 1, 0, size))
    f = nk.sigmoid(nk.slice_axis(gates, 1, size, 2 * size))
    g = nk.tanh(nk.slice_axis(gates, 1, 2 * size, 3 * size))
    o = nk.sigmoid(nk.slice_axis(gates, 1, 3 * size, 4 * size))
    c_new = f * c + i * g
    return o * nk.tanh(c_new), c_new


def encode_batch(params: Dict[str, Tensor], src_ids: np.ndarray, src_mask: np.ndarray) -> EncoderOutput:
    """Run the bidirectional encoder over a padded batch."""
    B, N = src_ids.shape
    H = params["enc_fwd_Wh"].shape[0]
    embedded = nk.embedding_lookup(params["embedding"], src_ids)

    outputs: Dict[str, List[Optional[Tensor]]] = {}
    finals: Dict[str, Tuple[Tensor, Tensor]] = {}
    for direction, positions in (("fwd", range(N)), ("bwd", range(N - 1, -1, -1))):
        x_proj = embedded @ params[f"enc_{direction}_Wx"]
        bias = nk.repeat(params[f"enc_{direction}_b"], B, 0)
        h = Tensor(np.zeros((B, H)))
        c = Tensor(np.zeros((B, H)))
        states: List[Optional[Tensor]] = [None] * N
        for i in positions:
            x_i = nk.reshape(nk.slice_axis(x_proj, 1, i, i + 1), (B, 4 * H))
            h_new, c_new = lstm_cell(x_i, h, c, params[f"enc_{direction}_Wh"], bias)
            # Padded positions keep the previous state
            keep = np.repeat(src_mask[:, i : i + 1], H, axis=1)
            h = h_new * keep + h * (1.0 - keep)
            c = c_new * keep + c * (1.0 - keep)
            states[i] = h
        outputs[direction] = states
        finals[direction] = (h, c)

    per_position = [
        nk.reshape(nk.concat([outputs["fwd"][i], outputs["bwd"][i]], axis=1), (B, 1, 2 * H))
        for i in range(N)
    ]
    states_tensor = nk.concat(per_position, axis=1)
    final = (
        nk.concat([finals["fwd"][0], finals["bwd"][0]], axis=1),
        nk.concat([finals["fwd"][1], finals["bwd"][1]], axis=1),
    )
    return EncoderOutput(
        states=states_tensor,
        proj=states_tensor @ params["att_W2"],
        mask=src_mask,
        final=final,
    )


def encode(input_chars: str, params: Dict[str, Tensor], vocab: Vocab) -> Tensor:
    """
    Encoder states of a single input, shape (N, 2H).

    Raises:
        EmptyInput: If the input is empty
    """
    if not input_chars:
        raise EmptyInput("Cannot encode an empty input")
    ids = np.array([vocab.ids(input_chars)], dtype=np.int64)
    output = encode_batch(params, ids, np.ones(ids.shape))
    return nk.reshape(output.states, output.states.shape[1:])


def attention_step(
    decoder_state: Tensor,
    encoder: EncoderOutput,
    coverage: Tensor,
    params: Dict[str, Tensor],
    use_coverage: bool = True,
) -> Tuple[Tensor, Tensor]:
    """
    Additive attention with an optional coverage term.

    e_{t,i} = v . tanh(W1 s_{t-1} + W2 h_i + Wg g_{t,i}), alpha_t = softmax(e_t),
    c_t = sum_i alpha_{t,i} h_i. Padded source positions get zero weight.

    Args:
        decoder_state: Previous decoder state, (B, D)
        encoder: Encoder output for the batch
        coverage: Sum of previous attention distributions, (B, N)
        params: Model parameters
        use_coverage: Include the coverage term in the scores

    Returns:
        (alpha (B, N), context (B, D))

    Raises:
        ShapeMismatch: If coverage does not match the source length
    """
    coverage = nk.as_tensor(coverage)
    B, N, A = encoder.proj.shape
    if coverage.shape != (B, N):
        raise ShapeMismatch(f"coverage shape {coverage.shape} does not match source shape {(B, N)}")

    features = nk.repeat(nk.reshape(decoder_state @ params["att_W1"], (B, 1, A)), N, 1) + encoder.proj
    if use_coverage:
        features = features + nk.reshape(coverage, (B, N, 1)) @ params["att_Wg"]
    scores = nk.reshape(nk.tanh(features) @ params["att_v"], (B, N))
    scores = scores + (1.0 - encoder.mask) * MASK_PENALTY
    alpha = nk.softmax(scores, axis=1)

    D = encoder.states.shape[2]
    context = nk.reshape(nk.matmul(nk.reshape(alpha, (B, 1, N)), encoder.states), (B, D))
    return alpha, context


def decode_step(
    prev_ids: np.ndarray,
    state: Tuple[Tensor, Tensor],
    context: Tensor,
    alpha: Tensor,
    params: Dict[str, Tensor],
    src_ext: np.ndarray,
    copy: bool = True,
) -> Tuple[Tensor, Tuple[Tensor, Tensor], Optional[Tensor]]:
    """
    One decoder step.

    P_vocab = softmax(W_out [s_t; c_t] + b_out). With copy enabled,
    P_g = sigmoid(w_c.c_t + w_s.s_t + w_x.x_t + b) and
    P_final(w) = P_g P_vocab(w) + (1 - P_g) * (attention on source positions holding w).

    Args:
        prev_ids: Previous output ids in the base vocab, (B,)
        state: Decoder (hidden, cell), each (B, D)
        context: Attention context c_t, (B, D)
        alpha: Attention distribution alpha_t, (B, N)
        params: Model parameters
        src_ext: One-hot extended ids of the source characters, (B, N, V_ext)
        copy: Enable the copy mixture

    Returns:
        (P_final (B, V_ext) or P_vocab (B, V) without copy, new state, P_g or None)
    """
    h, c = state
    B = h.shape[0]
    x = nk.embedding_lookup(params["embedding"], prev_ids)
    dec_input = nk.concat([x, context], axis=1)
    s, cell = lstm_cell(dec_input @ params["dec_Wx"], h, c, params["dec_Wh"], nk.repeat(params["dec_b"], B, 0))

    logits = nk.concat([s, context], axis=1) @ params["out_W"] + nk.repeat(params["out_b"], B, 0)
    p_vocab = nk.softmax(logits, axis=1)
    if not copy:
        return p_vocab, (s, cell), None

    p_gen = nk.sigmoid(
        context @ params["copy_wc"]
        + s @ params["copy_ws"]
        + x @ params["copy_wx"]
        + nk.repeat(params["copy_b"], B, 0)
    )
    V = p_vocab.shape[1]
    V_ext = src_ext.shape[2]
    if V_ext > V:
        p_vocab = nk.concat([p_vocab, Tensor(np.zeros((B, V_ext - V)))], axis=1)
    N = src_ext.shape[1]
    copy_dist = nk.reshape(nk.matmul(nk.reshape(alpha, (B, 1, N)), Tensor(src_ext)), (B, V_ext))
    p_final = nk.repeat(p_gen, V_ext, 1) * p_vocab + nk.repeat(1.0 - p_gen, V_ext, 1) * copy_dist
    return p_final, (s, cell), p_gen


def _band_mask(T: int, N: int, m: int) -> np.ndarray:
    t = np.arange(1, T + 1)[:, None]
    i = np.arange(1, N + 1)[None, :]
    return ((i <= t - m) | (i >= t + m)).astype(np.float64)


def loss_diag(
    alphas: Tensor,
    m: int,
    step_mask: Optional[np.ndarray] = None,
    src_mask: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Attention mass outside the diagonal band.

    For decoder step t (1-indexed) sums alpha_{t,i} over source positions with
    i <= t - m or i >= t + m. Per-example sums are averaged over the batch.

    Args:
        alphas: (T, N) for one example or (B, T, N)
        m: Band half-width in steps, at least 1
        step_mask: (B, T) validity of decoder steps
        src_mask: (B, N) validity of source positions
    """
    if m < 1:
        raise ConfigError(f"diagonal window must be >= 1, got {m}")
    alphas = nk.as_tensor(alphas)
    if alphas.ndim == 2:
        alphas = nk.reshape(alphas, (1,) + alphas.shape)
    B, T, N = alphas.shape
    weight = np.broadcast_to(_band_mask(T, N, m), (B, T, N)).copy()
    if step_mask is not None:
        weight *= step_mask[:, :, None]
    if src_mask is not None:
        weight *= src_mask[:, None, :]
    return nk.sum(alphas * weight) * (1.0 / B)


def loss_coverage(alphas: Tensor, step_mask: Optional[np.ndarray] = None) -> Tensor:
    """
    Coverage penalty: sum over steps and positions of min(alpha_t, g_t), where
    g_t is the sum of all earlier attention distributions and g_0 = 0.
    Per-example sums are averaged over the batch.

    Args:
        alphas: (T, N) for one example or (B, T, N)
        step_mask: (B, T) validity of decoder steps
    """
    alphas = nk.as_tensor(alphas)
    if alphas.ndim == 2:
        alphas = nk.reshape(alphas, (1,) + alphas.shape)
    B, T, N = alphas.shape
    coverage = Tensor(np.zeros((B, 1, N)))
    total = Tensor(0.0)
    for t in range(T):
        alpha_t = nk.slice_axis(alphas, 1, t, t + 1)
        overlap = nk.minimum(alpha_t, coverage)
        if step_mask is not None:
            overlap = overlap * np.repeat(step_mask[:, t : t + 1, None], N, axis=2)
        total = total + nk.sum(overlap)
        coverage = coverage + alpha_t
    return total * (1.0 / B)


@dataclass
class ForwardResult:
    distributions: List[Tensor]
    alphas: List[Tensor]


def forward(params: Dict[str, Tensor], batch: Batch, config: CorrectorConfig) -> ForwardResult:
    """Teacher-forced pass over a batch."""
    encoder = encode_batch(params, batch.src_ids, batch.src_mask)
    state = encoder.final
    B, N = batch.src_ids.shape
    coverage = Tensor(np.zeros((B, N)))
    result = ForwardResult(distributions=[], alphas=[])
    for t in range(batch.dec_in.shape[1]):
        alpha, context = attention_step(state[0], encoder, coverage, params, config.coverage)
        distribution, state, _ = decode_step(
            batch.dec_in[:, t], state, context, alpha, params, batch.src_ext, config.copy
        )
        coverage = coverage + alpha
        result.distributions.append(distribution)
        result.alphas.append(alpha)
    return result


def total_loss(batch: Batch, params: Dict[str, Tensor], config: CorrectorConfig) -> Tuple[Tensor, Dict[str, float]]:
    """
    L = L_ce + lambda_diag * L_diag + lambda_cov * L_c.

    L_ce is the mean negative log of the output distribution at the gold
    characters (EOS included) over all target tokens of the batch.

    Returns:
        (loss tensor, {"ce", "diag", "coverage", "total"} as floats)
    """
    result = forward(params, batch, config)
    B, N = batch.src_ids.shape

    nll = Tensor(0.0)
    for t, distribution in enumerate(result.distributions):
        picked = nk.sum(distribution * batch.target_onehot(t), axis=1)
        nll = nll + nk.sum(nk.log(picked + LOG_EPS) * batch.tgt_mask[:, t])
    ce = nll * (-1.0 / batch.n_tokens)

    alphas = nk.concat([nk.reshape(alpha, (B, 1, N)) for alpha in result.alphas], axis=1)
    diag = loss_diag(alphas, config.diag_window, batch.tgt_mask, batch.src_mask)
    coverage = loss_coverage(alphas, batch.tgt_mask)

    loss = ce + diag * config.lambda_diag + coverage * config.lambda_cov
    parts = {"ce": ce.item(), "diag": diag.item(), "coverage": coverage.item(), "total": loss.item()}
    return loss, parts


@dataclass
class Seq2SeqModel:
    params: Dict[str, Tensor]
    vocab: Vocab
    config: CorrectorConfig

    def parameter_count(self) -> int:
        return int(sum(p.data.size for p in self.params.values()))


@dataclass_json
@dataclass
class TrainReport:
    epochs_run: int = 0
    best_epoch: int = 0
    best_dev_loss: Optional[float] = None
    train_losses: List[float] = field(default_factory=list)
    dev_losses: List[float] = field(default_factory=list)
    stopped_early: bool = False
    n_train: int = 0
    n_dev: int = 0
    seconds: float = 0.0


def make_source(token: str, context: Tuple[str, str] = ("", ""), use_context: bool = False) -> str:
    """Model input for a token, optionally wrapped in its neighbours."""
    if not use_context:
        return token
    return CONTEXT_SEPARATOR.join([context[0], token, context[1]])


def corrector_pairs(sentences: Sequence[SentencePair], use_context: bool = False) -> List[Tuple[str, str]]:
    """(OCR source, gold target) pairs for every erroneous token with a non-empty OCR side."""
    pairs: List[Tuple[str, str]] = []
    skipped = 0
    for sentence in sentences:
        ocr_tokens = [token.ocr_token for token in sentence.tokens]
        for index, token in enumerate(sentence.tokens):
            if not token.label:
                continue
            if not token.ocr_token:
                skipped += 1
                continue
            context = (
                ocr_tokens[index - 1] if index > 0 else "",
                ocr_tokens[index + 1] if index + 1 < len(ocr_tokens) else "",
            )
            pairs.append((make_source(token.ocr_token, context, use_context), token.gs_token))
    if skipped:
        logging.debug(f"Skipped {skipped} erroneous tokens with an empty OCR side")
    return pairs


def evaluate_loss(model: Seq2SeqModel, pairs: Sequence[Tuple[str, str]]) -> float:
    """Mean total loss over pairs, weighted by batch size (no tape)."""
    total, count = 0.0, 0
    for chunk in iter_batches(list(pairs), model.config.batch_size):
        _, parts = total_loss(make_batch(chunk, model.vocab, model.config.copy), model.params, model.config)
        total += parts["total"] * len(chunk)
        count += len(chunk)
    return total / count if count else 0.0


def train(
    pairs: Sequence[Tuple[str, str]],
    config: Optional[CorrectorConfig] = None,
    dev_pairs: Optional[Sequence[Tuple[str, str]]] = None,
    vocab: Optional[Vocab] = None,
) -> Tuple[Seq2SeqModel, TrainReport]:
    """
    Train a corrector with Adam and early stopping on the development loss.

    Args:
        pairs: (erroneous, gold) token pairs
        config: Corrector hyperparameters
        dev_pairs: Development pairs; when omitted, a seeded 90/10 split of pairs is used
        vocab: Vocabulary; built from all pairs when omitted

    Returns:
        (model holding the best-dev parameters, TrainReport)

    Raises:
        DegenerateData: If the train or development split is empty
    """
    config = config or CorrectorConfig()
    config.validate()
    started = time.perf_counter()

    pairs = [(source, target) for source, target in pairs if source]
    if dev_pairs is None:
        train_pairs, dev_pairs = split_train_dev(pairs, DEFAULT_DEV_FRACTION, seed=config.seed)
    else:
        train_pairs = list(pairs)
        dev_pairs = [(source, target) for source, target in dev_pairs if source]
    if not train_pairs or not dev_pairs:
        raise DegenerateData(
            f"Corrector training needs non-empty train and dev splits (got {len(train_pairs)}/{len(dev_pairs)})"
        )

    vocab = vocab or Vocab.build([text for pair in list(train_pairs) + list(dev_pairs) for text in pair])
    params = init_params(len(vocab), config)
    model = Seq2SeqModel(params=params, vocab=vocab, config=config)
    optimizer = Adam(params, learning_rate=config.learning_rate)
    names = sorted(params)
    rng = np.random.default_rng(config.seed)

    logging.info(
        f"Training seq2seq corrector: {len(train_pairs)} train / {len(dev_pairs)} dev pairs, "
        f"vocab {len(vocab)}, {model.parameter_count()} parameters"
    )

    report = TrainReport(n_train=len(train_pairs), n_dev=len(dev_pairs))
    best_params = {name: p.data.copy() for name, p in params.items()}
    bad_epochs = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_pairs))
        epoch_loss, seen = 0.0, 0
        for chunk in iter_batches([train_pairs[i] for i in order], config.batch_size):
            batch = make_batch(chunk, vocab, config.copy)
            with Tape():
                loss, parts = total_loss(batch, params, config)
            grads = dict(zip(names, nk.backward(loss, [params[name] for name in names])))
            clip_by_global_norm(grads, config.clip_norm)
            optimizer.step(grads)
            epoch_loss += parts["total"] * len(chunk)
            seen += len(chunk)

        dev_loss = evaluate_loss(model, dev_pairs)
        report.train_losses.append(epoch_loss / seen)
        report.dev_losses.append(dev_loss)
        report.epochs_run = epoch
        logging.info(
            f"Epoch {epoch}/{config.epochs}: train loss {epoch_loss / seen:.4f}, dev loss {dev_loss:.4f}"
        )

        if report.best_dev_loss is None or dev_loss < report.best_dev_loss:
            report.best_dev_loss = dev_loss
            report.best_epoch = epoch
            best_params = {name: p.data.copy() for name, p in params.items()}
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > config.patience:
                report.stopped_early = True
                logging.info(f"Early stopping after epoch {epoch}; best dev loss at epoch {report.best_epoch}")
                break

    for name, data in best_params.items():
        params[name].data = data
    report.seconds = time.perf_counter() - started
    return model, report


def save_model(model: Seq2SeqModel, directory: str) -> None:
    """Write params.bin, vocab.tsv and config.json into a directory."""
    target = Path(directory)
    target.mkdir(parents=True, exist_ok=True)
    nk.save_checkpoint(
        str(target / PARAMS_FILE),
        {name: p.data for name, p in model.params.items()},
        {"kind": "seq2seq_corrector", "vocab_size": len(model.vocab)},
    )
    model.vocab.save(str(target / VOCAB_FILE))
    (target / CONFIG_FILE).write_text(model.config.to_json(indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logging.info(f"Saved seq2seq corrector to {directory}")


def load_model(directory: str) -> Seq2SeqModel:
    """
    Raises:
        CheckpointError: If a file is missing or the shapes disagree with config and vocab
    """
    source = Path(directory)
    try:
        config = CorrectorConfig.from_dict(json.loads((source / CONFIG_FILE).read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError) as e:
        raise CheckpointError(f"Cannot read corrector config in {directory}: {e}") from e
    vocab = Vocab.load(str(source / VOCAB_FILE))
    arrays, metadata = nk.load_checkpoint(str(source / PARAMS_FILE))
    if metadata.get("kind") != "seq2seq_corrector":
        raise CheckpointError(f"{directory} does not hold a seq2seq corrector")

    expected = parameter_shapes(len(vocab), config)
    if set(arrays) != set(expected):
        raise CheckpointError(f"{directory}: parameter names do not match the model definition")
    for name, shape in expected.items():
        if arrays[name].shape != shape:
            raise CheckpointError(f"{directory}: {name} has shape {arrays[name].shape}, expected {shape}")

    params = {name: Tensor(arrays[name], requires_grad=True, name=name) for name in sorted(arrays)}
    return Seq2SeqModel(params=params, vocab=vocab, config=config)
