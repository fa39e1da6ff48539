"""Finite-length message-passing simulation with missing connections.

Implements bit-level channels and the three hard-decision decoders on
explicit code graphs, with per-edge wiring defects injected by a
:class:`~miswire.graph.MiswiringMask`.  Messages live in the alphabet
{Plus, Minus, Erasure}; an inactive edge delivers Erasure in both
directions for the duration of the affected iteration.

All decoders run a flooding schedule with extrinsic message rules.  One
iteration is: variable-to-check messages from the channel value and the
previous iteration's check messages, then check-to-variable messages,
then a hard decision per variable node.  The per-iteration symbol error
rate is the fraction of decisions different from Plus (the all-one
codeword is transmitted throughout; erased decisions count as errors).

The decoding kernels are vectorized over a batch of trials, and an
exhaustive enumeration oracle computes exact per-iteration error rates
on tiny graphs for use in tests.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Callable, Iterator

import numpy as np

from .de import DecoderKind, DecoderSpec, default_gb_threshold
from .graph import MaskMode, MiswiringMask, TannerGraph, batch_active_edges, sample_code
from .rng import derive_seed, derive_seed_array, uniform01_array

__all__ = [
    "Msg",
    "ChannelKind",
    "ChannelModel",
    "TrialConfig",
    "AggregateStats",
    "transmit_all_one",
    "decode_peeling",
    "decode_gallager_a",
    "decode_gallager_b",
    "simulate_graph",
    "run_trials",
    "iter_trial_records",
    "oracle_exact_ser",
]

# Sub-stream tags for deriving per-code and per-trial seeds from a master seed.
_CODE_TAG = 0x434F4445  # "CODE"
_TRIAL_TAG = 0x5452494C  # "TRIL"
_CHAN_TAG = 0x4348414E  # "CHAN"
_MASK_TAG = 0x4D41534B  # "MASK"

_ORACLE_BUDGET = 2**24
_ORACLE_CHUNK = 2**16


class Msg(IntEnum):
    """Message alphabet: hard symbols plus an erasure."""

    PLUS = 1
    MINUS = -1
    ERASURE = 0


class ChannelKind(str, Enum):
    """Memoryless channel family."""

    BEC = "bec"
    BSC = "bsc"


@dataclass(frozen=True)
class ChannelModel:
    """Channel kind and its noise parameter epsilon in [0, 0.5)."""

    kind: ChannelKind
    epsilon: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        eps = float(self.epsilon)
        if not 0.0 <= eps < 0.5:
            raise ValueError(f"epsilon must lie in [0, 0.5), got {eps}")
        object.__setattr__(self, "epsilon", eps)


def _compatible(kind: DecoderKind, channel: ChannelKind) -> bool:
    if kind is DecoderKind.PEELING:
        return channel is ChannelKind.BEC
    return channel is ChannelKind.BSC


@dataclass(frozen=True)
class TrialConfig:
    """Monte Carlo run description: graph ensemble, channel, decoder, seeds."""

    n: int
    dv: int
    dc: int
    channel: ChannelModel
    spec: DecoderSpec
    mode: MaskMode
    iterations: int = 30
    num_code_realizations: int = 100
    trials_per_code: int = 1
    master_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", MaskMode(self.mode))
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.num_code_realizations < 1 or self.trials_per_code < 1:
            raise ValueError("trial counts must be >= 1")
        if not _compatible(self.spec.kind, self.channel.kind):
            raise ValueError(
                f"decoder {self.spec.kind.value} does not run on "
                f"{self.channel.kind.value} output"
            )


@dataclass(frozen=True)
class AggregateStats:
    """Per-iteration mean symbol error rate with its standard error."""

    mean_ser: np.ndarray
    stderr: np.ndarray
    trials: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "mean_ser", np.asarray(self.mean_ser, dtype=float))
        object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))


def transmit_all_one(channel: ChannelModel, n: int, seed: int) -> np.ndarray:
    """Channel output for the all-one codeword: int8 array over {1, -1, 0}.

    BEC erases each symbol with probability epsilon; BSC flips it to Minus.
    Deterministic given the seed.
    """
    return _transmit_batch(channel, n, np.array([seed], dtype=np.uint64))[0]


def _transmit_batch(channel: ChannelModel, n: int, seeds: np.ndarray) -> np.ndarray:
    """One channel realization per seed, stacked as a (len(seeds), n) array."""
    u = uniform01_array(
        np.asarray(seeds, dtype=np.uint64)[:, None],
        np.arange(n, dtype=np.uint64)[None, :],
    )
    noisy = np.int8(0) if channel.kind is ChannelKind.BEC else np.int8(-1)
    return np.where(u < channel.epsilon, noisy, np.int8(1))


def _decode_batch(
    graph: TannerGraph,
    kind: DecoderKind,
    received: np.ndarray,
    active_fn: Callable[[int], np.ndarray],
    iterations: int,
    *,
    tie_break_keep_channel: bool = True,
    b: int | None = None,
) -> np.ndarray:
    """Run one decoder on a batch of trials; returns per-iteration SER (B, T).

    ``received`` has shape (B, n); ``active_fn(t)`` yields the (B, n_edges)
    edge-activity mask for iteration t (1-based), applied to both message
    directions within that iteration.
    """
    var_starts = graph.var_ptr[:-1]
    chk_starts = graph.chk_ptr[:-1]
    by_check = graph.by_check
    n_batch = received.shape[0]
    n_edges = graph.n_edges

    ga_need = 2 if tie_break_keep_channel else 1
    chan_e = received[:, graph.var_of]
    delivered = np.zeros((n_batch, n_edges), dtype=np.int8)
    ser = np.empty((n_batch, iterations), dtype=float)

    def counts(flags: np.ndarray, starts: np.ndarray) -> np.ndarray:
        return np.add.reduceat(flags.view(np.int8), starts, axis=1)

    def expand(per_node: np.ndarray, degrees: np.ndarray) -> np.ndarray:
        return np.repeat(per_node, degrees, axis=1)

    for t in range(1, iterations + 1):
        active = active_fn(t)

        # Variable-to-check messages from the channel value and the previous
        # iteration's check messages (extrinsic: exclude the target edge).
        dp = (delivered == 1).view(np.int8)
        dm = (delivered == -1).view(np.int8)
        plus_ex = expand(counts(dp, var_starts), graph.var_deg) - dp
        minus_ex = expand(counts(dm, var_starts), graph.var_deg) - dm
        if kind is DecoderKind.PEELING:
            filled = np.where(
                plus_ex > 0, np.int8(1), np.where(minus_ex > 0, np.int8(-1), np.int8(0))
            )
            v2c = np.where(chan_e != 0, chan_e, filled)
        else:
            opposing = np.where(chan_e > 0, minus_ex, plus_ex)
            supporting = np.where(chan_e > 0, plus_ex, minus_ex)
            if kind is DecoderKind.GALLAGER_A:
                flip = (supporting == 0) & (opposing >= ga_need)
            else:
                flip = opposing >= b
            v2c = np.where(flip, -chan_e, chan_e)
        sent = np.where(active, v2c, np.int8(0))

        # Check-to-variable messages: parity of the extrinsic inputs, erasure
        # if any extrinsic input is erased (or arrives over an inactive edge).
        gathered = sent[:, by_check]
        gz = (gathered == 0).view(np.int8)
        gm = (gathered == -1).view(np.int8)
        zero_ex = expand(counts(gz, chk_starts), graph.chk_deg) - gz
        minus_par = (expand(counts(gm, chk_starts), graph.chk_deg) - gm) & np.int8(1)
        out = np.where(zero_ex > 0, np.int8(0), np.int8(1) - np.int8(2) * minus_par)
        c2v = np.empty_like(delivered)
        c2v[:, by_check] = out
        delivered = np.where(active, c2v, np.int8(0))

        # Hard decision per variable node over all connected incoming messages.
        plus_tot = counts((delivered == 1).view(np.int8), var_starts)
        minus_tot = counts((delivered == -1).view(np.int8), var_starts)
        if kind is DecoderKind.PEELING:
            decision = np.where(
                received != 0,
                received,
                np.where(
                    plus_tot > 0, np.int8(1), np.where(minus_tot > 0, np.int8(-1), np.int8(0))
                ),
            )
        else:
            opp_d = np.where(received > 0, minus_tot, plus_tot)
            sup_d = np.where(received > 0, plus_tot, minus_tot)
            if kind is DecoderKind.GALLAGER_A:
                flip_d = (sup_d == 0) & (opp_d >= ga_need)
            else:
                flip_d = opp_d >= b
            decision = np.where(flip_d, -received, received)
        ser[:, t - 1] = np.mean(decision != 1, axis=1)

    return ser


def _check_received(graph: TannerGraph, received, channel_kind: ChannelKind) -> np.ndarray:
    arr = np.asarray(received, dtype=np.int8)
    if arr.shape != (graph.n,):
        raise ValueError(f"received must have shape ({graph.n},)")
    if not np.isin(arr, (-1, 0, 1)).all():
        raise ValueError("received symbols must be Plus, Minus, or Erasure")
    if channel_kind is ChannelKind.BEC and np.any(arr == -1):
        raise ValueError("peeling decoder accepts erasure-channel input only")
    if channel_kind is ChannelKind.BSC and np.any(arr == 0):
        raise ValueError("bit-flipping decoders accept hard-decision input only")
    return arr


def _mask_active_fn(mask: MiswiringMask) -> Callable[[int], np.ndarray]:
    return lambda t: mask.active_edges(t)[None, :]


def decode_peeling(
    graph: TannerGraph,
    mask: MiswiringMask,
    received,
    iterations: int,
) -> np.ndarray:
    """Erasure-filling decoder; returns the per-iteration SER sequence.

    Check nodes forward the product of their other incoming symbols, or
    Erasure if any of them is erased or missing; variable nodes forward the
    channel value if known, else any known incoming symbol.  The decision is
    the channel value if known, else any known check message, else Erasure,
    and erased decisions count as errors.
    """
    arr = _check_received(graph, received, ChannelKind.BEC)
    return _decode_batch(
        graph, DecoderKind.PEELING, arr[None, :], _mask_active_fn(mask), iterations
    )[0]


def decode_gallager_a(
    graph: TannerGraph,
    mask: MiswiringMask,
    received,
    iterations: int,
    tie_break_keep_channel: bool = True,
) -> np.ndarray:
    """Unanimity bit-flipping decoder; returns the per-iteration SER sequence.

    A node flips its channel value iff every connected non-erasure incoming
    message opposes it — and, when the tie-break keeps the channel, at least
    two such messages exist.  Check nodes send the product of their other
    incoming symbols, or Erasure if any is erased or missing.
    """
    arr = _check_received(graph, received, ChannelKind.BSC)
    return _decode_batch(
        graph,
        DecoderKind.GALLAGER_A,
        arr[None, :],
        _mask_active_fn(mask),
        iterations,
        tie_break_keep_channel=tie_break_keep_channel,
    )[0]


def decode_gallager_b(
    graph: TannerGraph,
    mask: MiswiringMask,
    received,
    iterations: int,
    b: int | None = None,
) -> np.ndarray:
    """Counting bit-flipping decoder; returns the per-iteration SER sequence.

    A node flips its channel value iff at least ``b`` connected non-erasure
    incoming messages oppose it.  ``b`` defaults to the majority threshold
    for the graph's design degree and is not adjusted for missing edges.
    """
    if b is None:
        b = default_gb_threshold(graph.dv)
    if not 1 <= b <= graph.dv:
        raise ValueError(f"b must lie in [1, dv], got {b}")
    arr = _check_received(graph, received, ChannelKind.BSC)
    return _decode_batch(
        graph,
        DecoderKind.GALLAGER_B,
        arr[None, :],
        _mask_active_fn(mask),
        iterations,
        b=b,
    )[0]


def _sim_kwargs(spec: DecoderSpec, dv: int) -> dict:
    if spec.kind is DecoderKind.GALLAGER_B:
        b = spec.gb_threshold_b if spec.gb_threshold_b is not None else default_gb_threshold(dv)
        if not 1 <= b <= dv:
            raise ValueError(f"b must lie in [1, dv], got {b}")
        return {"b": b}
    if spec.kind is DecoderKind.GALLAGER_A:
        return {"tie_break_keep_channel": spec.tie_break_keep_channel}
    return {}


def _simulate_given_graph(
    graph: TannerGraph,
    channel: ChannelModel,
    spec: DecoderSpec,
    mode: MaskMode,
    iterations: int,
    trial_seeds: np.ndarray,
) -> np.ndarray:
    """Decode one independent trial per seed on a fixed graph; SER rows (B, T)."""
    trial_seeds = np.asarray(trial_seeds, dtype=np.uint64)
    chan_seeds = derive_seed_array(trial_seeds, _CHAN_TAG)
    mask_seeds = derive_seed_array(trial_seeds, _MASK_TAG)
    received = _transmit_batch(channel, graph.n, chan_seeds)

    def active_fn(t: int) -> np.ndarray:
        return batch_active_edges(mode, spec.alpha, mask_seeds, graph.n_edges, t)

    return _decode_batch(
        graph,
        spec.kind,
        received,
        active_fn,
        iterations,
        **_sim_kwargs(spec, graph.dv),
    )


def simulate_graph(
    graph: TannerGraph,
    channel: ChannelModel,
    spec: DecoderSpec,
    mode: MaskMode,
    iterations: int,
    n_trials: int,
    master_seed: int = 0,
) -> AggregateStats:
    """Monte Carlo estimate of the per-iteration SER on one fixed graph."""
    if not _compatible(spec.kind, channel.kind):
        raise ValueError(
            f"decoder {spec.kind.value} does not run on {channel.kind.value} output"
        )
    if n_trials < 1 or iterations < 1:
        raise ValueError("n_trials and iterations must be >= 1")
    base = derive_seed(master_seed, _TRIAL_TAG)
    trial_seeds = derive_seed_array(
        np.full(n_trials, base, dtype=np.uint64), np.arange(n_trials, dtype=np.uint64)
    )
    ser = _simulate_given_graph(graph, channel, spec, mode, iterations, trial_seeds)
    return _aggregate(ser)


def _aggregate(ser: np.ndarray) -> AggregateStats:
    n_trials = ser.shape[0]
    mean = ser.mean(axis=0)
    if n_trials > 1:
        stderr = ser.std(axis=0, ddof=1) / np.sqrt(n_trials)
    else:
        stderr = np.zeros_like(mean)
    return AggregateStats(mean_ser=mean, stderr=stderr, trials=n_trials)


def _trial_seed(master_seed: int, code_index: int, trial_index: int) -> int:
    return derive_seed(master_seed, _TRIAL_TAG, code_index, trial_index)


def _code_seed(master_seed: int, code_index: int) -> int:
    return derive_seed(master_seed, _CODE_TAG, code_index)


def _run_code_range(config: TrialConfig, lo: int, hi: int) -> np.ndarray:
    """SER rows for code realizations lo..hi-1, trials_per_code rows each."""
    if hi <= lo:
        return np.zeros((0, config.iterations), dtype=float)
    blocks = []
    for code_index in range(lo, hi):
        graph = sample_code(
            config.n, config.dv, config.dc, _code_seed(config.master_seed, code_index)
        )
        trial_seeds = np.array(
            [
                _trial_seed(config.master_seed, code_index, j)
                for j in range(config.trials_per_code)
            ],
            dtype=np.uint64,
        )
        blocks.append(
            _simulate_given_graph(
                graph,
                config.channel,
                config.spec,
                config.mode,
                config.iterations,
                trial_seeds,
            )
        )
    return np.concatenate(blocks, axis=0)


def run_trials(config: TrialConfig, workers: int = 1) -> AggregateStats:
    """Monte Carlo over fresh code, channel, and mask realizations.

    Every trial's seed is derived by stable hashing of its (code, trial)
    index, so results are bit-identical for any worker count and any
    execution order.
    """
    n_codes = config.num_code_realizations
    if workers <= 1 or n_codes == 1:
        rows = _run_code_range(config, 0, n_codes)
    else:
        workers = min(workers, n_codes)
        bounds = np.linspace(0, n_codes, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_code_range, config, int(bounds[k]), int(bounds[k + 1]))
                for k in range(workers)
            ]
            rows = np.concatenate([f.result() for f in futures], axis=0)
    return _aggregate(rows)


def iter_trial_records(config: TrialConfig) -> Iterator[dict]:
    """Stream per-trial records: code_seed, trial_seed, iteration, ser."""
    for code_index in range(config.num_code_realizations):
        code_seed = _code_seed(config.master_seed, code_index)
        graph = sample_code(config.n, config.dv, config.dc, code_seed)
        for trial_index in range(config.trials_per_code):
            trial_seed = _trial_seed(config.master_seed, code_index, trial_index)
            ser = _simulate_given_graph(
                graph,
                config.channel,
                config.spec,
                config.mode,
                config.iterations,
                np.array([trial_seed], dtype=np.uint64),
            )[0]
            for t, value in enumerate(ser, start=1):
                yield {
                    "code_seed": code_seed,
                    "trial_seed": trial_seed,
                    "iteration": t,
                    "ser": float(value),
                }


def _bits_range(lo: int, hi: int, width: int) -> np.ndarray:
    """Binary expansions of the integers lo..hi-1 as a (hi-lo, width) bool array."""
    idx = np.arange(lo, hi, dtype=np.int64)
    return ((idx[:, None] >> np.arange(width, dtype=np.int64)[None, :]) & 1).astype(bool)


def _chan_chunk(channel: ChannelModel, n: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Channel outputs lo..hi-1 (by noise-pattern index) and their probabilities."""
    eps = channel.epsilon
    if eps == 0.0:
        return np.ones((1, n), dtype=np.int8), np.array([1.0])
    bits = _bits_range(lo, hi, n)
    noisy = np.int8(0) if channel.kind is ChannelKind.BEC else np.int8(-1)
    flips = bits.sum(axis=1)
    weights = eps**flips * (1.0 - eps) ** (n - flips)
    return np.where(bits, noisy, np.int8(1)), weights


def _mask_chunk(alpha: float, width: int, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Edge-activity patterns lo..hi-1 (by removal-pattern index) and probabilities."""
    if alpha == 0.0:
        return np.ones((1, width), dtype=bool), np.array([1.0])
    if alpha == 1.0:
        return np.zeros((1, width), dtype=bool), np.array([1.0])
    removed = _bits_range(lo, hi, width)
    k = removed.sum(axis=1)
    weights = alpha**k * (1.0 - alpha) ** (width - k)
    return ~removed, weights


def oracle_exact_ser(
    tiny_graph: TannerGraph,
    channel: ChannelModel,
    spec: DecoderSpec,
    mode: MaskMode,
    iterations: int,
) -> np.ndarray:
    """Exact per-iteration expected SER by exhaustive enumeration.

    Enumerates every channel realization and every mask realization with its
    probability (transient masks enumerate each iteration's removals
    independently) and averages the decoder output.  Intended for tests on
    tiny graphs; the weighted-configuration budget is capped at 2^24.
    """
    if not _compatible(spec.kind, channel.kind):
        raise ValueError(
            f"decoder {spec.kind.value} does not run on {channel.kind.value} output"
        )
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    mode = MaskMode(mode)
    n = tiny_graph.n
    n_edges = tiny_graph.n_edges
    mask_width = n_edges * (iterations if mode is MaskMode.TRANSIENT else 1)

    n_chan = 1 if channel.epsilon == 0.0 else 2**n
    n_mask = 1 if spec.alpha in (0.0, 1.0) else 2**mask_width
    if n_chan * n_mask > _ORACLE_BUDGET:
        raise ValueError(
            f"enumeration budget exceeded: {n_chan} x {n_mask} > {_ORACLE_BUDGET}"
        )

    kwargs = _sim_kwargs(spec, tiny_graph.dv)
    total = np.zeros(iterations, dtype=float)

    def mask_slice(patterns: np.ndarray, t: int) -> np.ndarray:
        if mode is MaskMode.PERMANENT:
            return patterns
        return patterns[:, (t - 1) * n_edges : t * n_edges]

    if n_mask >= n_chan:
        # Loop channel patterns one at a time, batch masks in chunks.
        for chan_lo in range(0, n_chan):
            pattern, weight = _chan_chunk(channel, n, chan_lo, chan_lo + 1)
            for lo in range(0, n_mask, _ORACLE_CHUNK):
                activity, mask_w = _mask_chunk(
                    spec.alpha, mask_width, lo, min(lo + _ORACLE_CHUNK, n_mask)
                )
                received = np.broadcast_to(pattern[0], (activity.shape[0], n))
                ser = _decode_batch(
                    tiny_graph,
                    spec.kind,
                    received,
                    lambda t: mask_slice(activity, t),
                    iterations,
                    **kwargs,
                )
                total += weight[0] * (mask_w @ ser)
    else:
        # Loop mask patterns one at a time, batch channel patterns in chunks.
        for mask_lo in range(0, n_mask):
            activity, mask_w = _mask_chunk(spec.alpha, mask_width, mask_lo, mask_lo + 1)
            for lo in range(0, n_chan, _ORACLE_CHUNK):
                received, chan_w = _chan_chunk(
                    channel, n, lo, min(lo + _ORACLE_CHUNK, n_chan)
                )
                ser = _decode_batch(
                    tiny_graph,
                    spec.kind,
                    received,
                    lambda t: np.broadcast_to(
                        mask_slice(activity, t), (received.shape[0], n_edges)
                    ),
                    iterations,
                    **kwargs,
                )
                total += mask_w[0] * (chan_w @ ser)

    return total
