"""Transformer inference cost formulas against hand-checked goldens."""

import pytest

from nesykit.flops import (
    CostBreakdown,
    ModelArch,
    MoeSpec,
    TokenCount,
    arch_from_json,
    cost_breakdown,
    discrepancy,
    flops_approx,
    flops_first_token,
    flops_ith_base,
    flops_ith_constant,
    flops_ith_token,
    flops_total,
    list_bundled_arches,
    load_bundled_arch,
    param_count,
)

# Small enough to verify by hand; g=1 keeps fractions away.
TOY = ModelArch(
    name="toy",
    d_model=8,
    d_ff=32,
    d_attn=4,
    n_heads=2,
    n_layer=2,
    g=1,
    n_vocab=16,
    n_A=6,
    n_max=2048,
)
TOY_MOE = ModelArch(
    name="toy-moe",
    d_model=8,
    d_ff=32,
    d_attn=4,
    n_heads=2,
    n_layer=2,
    g=1,
    n_vocab=16,
    n_A=6,
    n_max=2048,
    moe=MoeSpec(n_active_experts=2, d_ff_expert=32),
)


class TestToyGoldens:
    def test_param_count(self):
        assert param_count(TOY) == 2216

    def test_first_token(self):
        assert flops_first_token(TOY, 1) == 5356
        assert flops_first_token(TOY, 4) == 20728

    def test_ith_token_parts(self):
        assert flops_ith_constant(TOY) == 108
        assert flops_ith_base(TOY, 4) == 5680
        assert flops_ith_token(TOY, 4, 2) == 5896

    def test_total(self):
        assert flops_total(TOY, TokenCount(4, 3)) == 32628

    def test_moe_runs_expert_blocks(self):
        assert flops_first_token(TOY_MOE, 1) == 8956
        assert flops_first_token(TOY_MOE, 4) == 35128
        assert flops_total(TOY_MOE, TokenCount(4, 3)) == 54228


class TestClosedForm:
    @pytest.mark.parametrize("shape", [(4, 3), (1, 1), (17, 9), (128, 40)])
    def test_total_equals_token_by_token_sum(self, shape):
        n_ctx, n_out = shape
        brute = flops_first_token(TOY, n_ctx) + sum(
            flops_ith_token(TOY, n_ctx, i) for i in range(2, n_out + 1)
        )
        assert flops_total(TOY, TokenCount(n_ctx, n_out)) == brute

    def test_total_on_a_real_arch(self):
        arch = load_bundled_arch("falcon-3-10b")
        brute = flops_first_token(arch, 64) + sum(
            flops_ith_token(arch, 64, i) for i in range(2, 13)
        )
        assert flops_total(arch, TokenCount(64, 12)) == brute

    def test_prefill_cost_is_monotone(self):
        costs = [flops_first_token(TOY, n) for n in range(1, 9)]
        assert all(b > a for a, b in zip(costs, costs[1:]))


class TestNumerics:
    def test_integer_inputs_stay_integer(self):
        total = flops_total(TOY, TokenCount(4, 3))
        assert isinstance(total, int)
        assert isinstance(flops_ith_constant(TOY), int)

    def test_fractional_token_counts_flow_exactly(self):
        # 87.5 is 175/2, representable exactly; the mean of two integer
        # runs must equal the cost at the mean token count for the linear
        # part plus the exact quadratic correction, so spot-check against
        # Fraction-free arithmetic.
        half = flops_total(TOY, TokenCount(4, 87.5))
        assert isinstance(half, float)
        assert half == pytest.approx(
            (flops_total(TOY, TokenCount(4, 87)) + flops_total(TOY, TokenCount(4, 88))) / 2,
            rel=1e-12,
            abs=flops_ith_constant(TOY),
        )

    def test_approx_rule(self):
        assert flops_approx(1000, TokenCount(3, 2)) == 10000
        assert flops_approx(405e9, TokenCount(128, 87.5)) == pytest.approx(
            2 * 405e9 * 215.5
        )

    def test_discrepancy(self):
        assert discrepancy(100, 110) == pytest.approx(10.0)
        assert discrepancy(100, 90) == pytest.approx(10.0)
        assert discrepancy(200, 200) == 0.0


class TestValidation:
    def test_token_counts_must_be_positive(self):
        with pytest.raises(ValueError):
            TokenCount(0, 5)
        with pytest.raises(ValueError):
            TokenCount(5, 0)

    def test_ith_token_starts_at_two(self):
        with pytest.raises(ValueError):
            flops_ith_token(TOY, 4, 1)

    def test_param_count_rejects_moe(self):
        with pytest.raises(ValueError, match="mixture"):
            param_count(TOY_MOE)

    def test_approx_requires_positive_params(self):
        with pytest.raises(ValueError):
            flops_approx(0, TokenCount(1, 1))

    def test_arch_shape_constraints(self):
        base = dict(
            name="bad", d_model=8, d_ff=32, d_attn=4, n_heads=2,
            n_layer=2, g=1, n_vocab=16, n_A=6, n_max=64,
        )
        with pytest.raises(ValueError, match="d_model"):
            ModelArch(**{**base, "d_attn": 3})
        with pytest.raises(ValueError, match="divisible"):
            ModelArch(**{**base, "g": 2, "n_heads": 3, "d_model": 12})
        with pytest.raises(ValueError, match="g must"):
            ModelArch(**{**base, "g": 0})


class TestArchFiles:
    def test_bundled_inventory(self):
        assert list_bundled_arches() == [
            "deepseek-r1",
            "falcon-3-10b",
            "gemma-3-12b",
            "llama-3.1-405b",
            "phi-4-14b",
        ]

    @pytest.mark.parametrize(
        ("name", "expected"),
        [
            ("llama-3.1-405b", 403752042496),
            ("phi-4-14b", 14145704960),
            ("gemma-3-12b", 11270188800),
            ("falcon-3-10b", 9903000576),
        ],
    )
    def test_dense_param_counts(self, name, expected):
        assert param_count(load_bundled_arch(name)) == expected

    def test_moe_arch_carries_active_params(self):
        arch = load_bundled_arch("deepseek-r1")
        assert arch.moe == MoeSpec(n_active_experts=9, d_ff_expert=2048)
        assert arch.n_active_params == 37e9

    def test_unknown_name(self):
        with pytest.raises(FileNotFoundError, match="available"):
            load_bundled_arch("gpt-1")

    def test_missing_fields_rejected(self):
        with pytest.raises(ValueError, match="missing"):
            arch_from_json({"name": "x", "d_model": 8})


class TestCostBreakdown:
    def test_components_sum_to_c1(self):
        out = cost_breakdown(TOY, TokenCount(4, 3))
        assert out.embedding == 0
        assert out.attention + out.feed_forward + out.output == out.c1
        assert out.c1 == flops_first_token(TOY, 4)
        assert out.c_total == flops_total(TOY, TokenCount(4, 3))

    def test_approx_column_fills_from_argument(self):
        out = cost_breakdown(TOY, TokenCount(4, 3), n_active_params=2216)
        assert out.approx_2nn == flops_approx(2216, TokenCount(4, 3))
        assert out.discrepancy_percent == pytest.approx(
            discrepancy(out.c_total, out.approx_2nn)
        )

    def test_approx_column_absent_without_params(self):
        out = cost_breakdown(TOY, TokenCount(4, 3))
        assert out.approx_2nn is None
        assert out.discrepancy_percent is None

    def test_arch_default_params_used(self):
        arch = load_bundled_arch("falcon-3-10b")
        out = cost_breakdown(arch, TokenCount(100, 10))
        assert out.approx_2nn == flops_approx(10e9, TokenCount(100, 10))

    def test_json_shape(self):
        record = cost_breakdown(TOY, TokenCount(4, 3)).to_json()
        assert record["c_total"] == 32628
        assert set(record) == {
            "embedding", "attention", "feed_forward", "output",
            "c1", "c_i0", "c_ic", "c_total", "approx_2nn", "discrepancy_percent",
        }
