"""Theoretical transformer inference FLOPs and the 2N(n_ctx+n_out) approximation.

Models decoder-only inference with a KV cache: the first token pays the
full quadratic prompt cost C1, every later token i pays Ci = C_i0 + i*C_ic,
and the run total has a closed form that this module evaluates exactly.
Assumes tied input-output embeddings, RoPE positions (so the embedding
lookup itself costs no FLOPs), RMSNorm, grouped-query attention with ratio
g, and a gated FFN whose activation costs n_A FLOPs per element (6 for
SwiGLU/SiLU, 10 for GeGLU). Biases, the MoE router, and latent-attention
compression tricks are ignored.

All arithmetic runs in rationals and is returned as exact ints whenever
the inputs are integral; fractional token averages (e.g. 87.5 completion
tokens) flow through without rounding and come back as floats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

Number = int | float


def _materialize(value: Fraction) -> Number:
    if value.denominator == 1:
        return int(value)
    return float(value)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MoeSpec:
    """Mixture-of-experts FFN shape: experts active per token, each expert's d_ff."""

    n_active_experts: int
    d_ff_expert: int

    def __post_init__(self) -> None:
        if self.n_active_experts < 1 or self.d_ff_expert < 1:
            raise ValueError("MoE fields must be positive")


@dataclass(frozen=True)
class ModelArch:
    """Architecture constants for one model.

    ``n_active_params`` is the parameter count the 2Nn approximation
    uses (the advertised active-parameter figure for MoE models);
    ``n_max`` is metadata only and never enters a FLOPs formula.
    """

    name: str
    d_model: int
    d_ff: int
    d_attn: int
    n_heads: int
    n_layer: int
    g: int
    n_vocab: int
    n_A: int
    n_max: int
    moe: MoeSpec | None = None
    n_active_params: float | None = None
    metadata: dict | None = None

    def __post_init__(self) -> None:
        for field_name in ("d_model", "d_ff", "d_attn", "n_heads", "n_layer", "n_vocab", "n_A", "n_max"):
            if getattr(self, field_name) < 1:
                raise ValueError(f"{field_name} must be positive")
        if self.g < 1:
            raise ValueError("g must be at least 1")
        if self.n_heads % self.g:
            raise ValueError("n_heads must be divisible by g")
        if self.d_model != self.n_heads * self.d_attn:
            raise ValueError("d_model must equal n_heads * d_attn")


@dataclass(frozen=True)
class TokenCount:
    n_ctx: Number
    n_out: Number

    def __post_init__(self) -> None:
        if self.n_ctx < 1 or self.n_out < 1:
            raise ValueError("token counts must be at least 1")


@dataclass(frozen=True)
class CostBreakdown:
    """Per-component FLOPs for one (arch, token-count) evaluation."""

    embedding: Number
    attention: Number
    feed_forward: Number
    output: Number
    c1: Number
    c_i0: Number
    c_ic: Number
    c_total: Number
    approx_2nn: Number | None = None
    discrepancy_percent: float | None = None

    def to_json(self) -> dict:
        return {
            "embedding": self.embedding,
            "attention": self.attention,
            "feed_forward": self.feed_forward,
            "output": self.output,
            "c1": self.c1,
            "c_i0": self.c_i0,
            "c_ic": self.c_ic,
            "c_total": self.c_total,
            "approx_2nn": self.approx_2nn,
            "discrepancy_percent": self.discrepancy_percent,
        }


# ---------------------------------------------------------------------------
# Component formulas
# ---------------------------------------------------------------------------


def _attn_layer_first(arch: ModelArch, n_ctx: Fraction) -> Fraction:
    """Attention-block cost per layer while prefilling n_ctx prompt tokens.

    Projections and RoPE scale linearly; scores and the weighted sum pay
    the causal-triangle n_ctx(n_ctx+1) factor, with softmax at roughly 10
    FLOPs per surviving score entry plus one scale multiply.
    """
    dm, nh, g = arch.d_model, arch.n_heads, Fraction(arch.g)
    return (
        (4 + 4 / g) * n_ctx * dm * dm
        + (8 + 3 / g) * n_ctx * dm
        + 2 * n_ctx * (n_ctx + 1) * dm
        + Fraction(11, 2) * nh * n_ctx * (n_ctx + 1)
    )


def _ffn_layer(arch: ModelArch, n_tokens: Fraction) -> Fraction:
    """Feed-forward block cost per layer for n_tokens rows.

    The norm+residual overhead (5 FLOPs per element) and the gated
    expansion/contraction are one block; a mixture model runs that whole
    block once per active expert at the expert width.
    """

    def block(d_ff: int) -> Fraction:
        return (
            5 * n_tokens * arch.d_model
            + 6 * n_tokens * arch.d_model * d_ff
            + (arch.n_A + 1) * n_tokens * d_ff
        )

    if arch.moe is None:
        return block(arch.d_ff)
    return arch.moe.n_active_experts * block(arch.moe.d_ff_expert)


def _output_cost(arch: ModelArch) -> Fraction:
    """Final norm, unembedding matmul, and softmax over the vocabulary."""
    return Fraction(4 * arch.d_model + 2 * arch.d_model * arch.n_vocab + 10 * arch.n_vocab)


def _c1(arch: ModelArch, n_ctx: Fraction) -> tuple[Fraction, Fraction, Fraction]:
    attention = arch.n_layer * _attn_layer_first(arch, n_ctx)
    feed_forward = arch.n_layer * _ffn_layer(arch, n_ctx)
    return attention, feed_forward, _output_cost(arch)


def _c_ic(arch: ModelArch) -> Fraction:
    return Fraction((4 * arch.d_model + 11 * arch.n_heads) * arch.n_layer)


def _c_i0(arch: ModelArch, n_ctx: Fraction) -> Fraction:
    """The i-independent part of the ith-token cost.

    One query row runs against the cached prompt: linear projections,
    attention against the n_ctx prefix (the i-proportional part lives in
    C_ic), and a single-token FFN block plus the output layer.
    """
    dm, nh, g = arch.d_model, arch.n_heads, Fraction(arch.g)
    one = Fraction(1)
    attention = (
        (8 + 3 / g) * dm
        + (4 + 4 / g) * dm * dm
        + 4 * dm * n_ctx
        + 11 * nh * n_ctx
    )
    return arch.n_layer * (attention + _ffn_layer(arch, one)) + _output_cost(arch)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def param_count(arch: ModelArch) -> int:
    """Parameter count N for a dense model (tied embeddings, RoPE, RMSNorm).

    N = d_model*n_vocab + n_layer*d_model*(2 + (2+2/g)*d_model + 3*d_ff) + d_model
    """
    if arch.moe is not None:
        raise ValueError(
            "parameter counting for mixture-of-experts models is not supported; "
            "set n_active_params on the arch instead"
        )
    g = Fraction(arch.g)
    n = (
        arch.d_model * arch.n_vocab
        + arch.n_layer * arch.d_model * (2 + (2 + 2 / g) * arch.d_model + 3 * arch.d_ff)
        + arch.d_model
    )
    if n.denominator != 1:
        raise ValueError("parameter count is non-integral; check d_model and g")
    return int(n)


def flops_first_token(arch: ModelArch, n_ctx: Number) -> Number:
    """C1: cost of prefilling the prompt and emitting the first token."""
    if n_ctx < 1:
        raise ValueError("n_ctx must be at least 1")
    attention, feed_forward, output = _c1(arch, Fraction(n_ctx))
    return _materialize(attention + feed_forward + output)


def flops_ith_constant(arch: ModelArch) -> int:
    """C_ic: the per-position attention growth paid i times at token i."""
    return int(_c_ic(arch))


def flops_ith_base(arch: ModelArch, n_ctx: Number) -> Number:
    """C_i0: the i-independent part of the ith-token cost."""
    if n_ctx < 1:
        raise ValueError("n_ctx must be at least 1")
    return _materialize(_c_i0(arch, Fraction(n_ctx)))


def flops_ith_token(arch: ModelArch, n_ctx: Number, i: int) -> Number:
    """Ci = C_i0 + i*C_ic: cost of the ith completion token (i >= 2)."""
    if i < 2:
        raise ValueError("the ith-token formula applies from i=2 onward")
    if n_ctx < 1:
        raise ValueError("n_ctx must be at least 1")
    return _materialize(_c_i0(arch, Fraction(n_ctx)) + i * _c_ic(arch))


def flops_total(arch: ModelArch, tokens: TokenCount) -> Number:
    """Closed-form total: C1 + (n_out-1)*C_i0 + ((n_out+2)(n_out-1)/2)*C_ic."""
    n_ctx, n_out = Fraction(tokens.n_ctx), Fraction(tokens.n_out)
    attention, feed_forward, output = _c1(arch, n_ctx)
    c1 = attention + feed_forward + output
    total = (
        c1
        + (n_out - 1) * _c_i0(arch, n_ctx)
        + (n_out + 2) * (n_out - 1) / 2 * _c_ic(arch)
    )
    return _materialize(total)


def flops_approx(n_active_params: Number, tokens: TokenCount) -> Number:
    """The 2Nn rule of thumb: twice the active parameters times all tokens."""
    if n_active_params <= 0:
        raise ValueError("n_active_params must be positive")
    return _materialize(
        2 * Fraction(n_active_params) * (Fraction(tokens.n_ctx) + Fraction(tokens.n_out))
    )


def discrepancy(theoretical: Number, approx: Number) -> float:
    """Percentage gap of the approximation relative to the theoretical cost."""
    if theoretical <= 0:
        raise ValueError("theoretical cost must be positive")
    return float(100 * abs(Fraction(approx) - Fraction(theoretical)) / Fraction(theoretical))


def cost_breakdown(
    arch: ModelArch, tokens: TokenCount, n_active_params: Number | None = None
) -> CostBreakdown:
    """Evaluate every cost quantity for one run shape.

    The approximation column is filled from ``n_active_params`` (falling
    back to the arch file's value) and left None when neither is given.
    """
    n_ctx, n_out = Fraction(tokens.n_ctx), Fraction(tokens.n_out)
    attention, feed_forward, output = _c1(arch, n_ctx)
    c1 = attention + feed_forward + output
    c_i0 = _c_i0(arch, n_ctx)
    c_ic = _c_ic(arch)
    total = c1 + (n_out - 1) * c_i0 + (n_out + 2) * (n_out - 1) / 2 * c_ic

    params = n_active_params if n_active_params is not None else arch.n_active_params
    approx = None
    gap = None
    if params is not None:
        approx = flops_approx(params, tokens)
        gap = discrepancy(_materialize(total), approx)
    return CostBreakdown(
        embedding=0,
        attention=_materialize(attention),
        feed_forward=_materialize(feed_forward),
        output=_materialize(output),
        c1=_materialize(c1),
        c_i0=_materialize(c_i0),
        c_ic=int(c_ic),
        c_total=_materialize(total),
        approx_2nn=approx,
        discrepancy_percent=gap,
    )


# ---------------------------------------------------------------------------
# Arch files
# ---------------------------------------------------------------------------

_ARCH_FIELDS = (
    "name", "d_model", "d_ff", "d_attn", "n_heads", "n_layer",
    "g", "n_vocab", "n_A", "n_max",
)


def arch_from_json(record: dict) -> ModelArch:
    missing = [f for f in _ARCH_FIELDS if f not in record]
    if missing:
        raise ValueError(f"arch file is missing fields: {missing}")
    moe = None
    if record.get("moe") is not None:
        moe = MoeSpec(
            n_active_experts=int(record["moe"]["n_active_experts"]),
            d_ff_expert=int(record["moe"]["d_ff_expert"]),
        )
    return ModelArch(
        name=str(record["name"]),
        d_model=int(record["d_model"]),
        d_ff=int(record["d_ff"]),
        d_attn=int(record["d_attn"]),
        n_heads=int(record["n_heads"]),
        n_layer=int(record["n_layer"]),
        g=int(record["g"]),
        n_vocab=int(record["n_vocab"]),
        n_A=int(record["n_A"]),
        n_max=int(record["n_max"]),
        moe=moe,
        n_active_params=record.get("n_active_params"),
        metadata=record.get("metadata"),
    )


def load_arch(path: str | Path) -> ModelArch:
    with open(path, encoding="utf-8") as handle:
        return arch_from_json(json.load(handle))


def bundled_arch_dir() -> Path:
    return Path(__file__).parent / "assets" / "arch"


def list_bundled_arches() -> list[str]:
    return sorted(p.stem for p in bundled_arch_dir().glob("*.json"))


def load_bundled_arch(name: str) -> ModelArch:
    path = bundled_arch_dir() / f"{name}.json"
    if not path.exists():
        raise FileNotFoundError(
            f"no bundled arch named {name!r}; available: {list_bundled_arches()}"
        )
    return load_arch(path)
