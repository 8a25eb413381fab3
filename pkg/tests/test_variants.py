#!/usr/bin/env python3
"""
Tests for variant specs and variant generation
"""
import numpy as np
import pytest
from pydantic import ValidationError

from taskenv.errors import VariantError
from taskenv.taskdl import parse_goal
from taskenv.tasks import (
    AtomicProblem,
    ChannelPatch,
    Conjunction,
    Distribution,
    StartPerturbation,
    VariantSpec,
    expand_variants,
    generate_variants,
)
from taskenv.world import Channel


def draw(driving_doc, count=None, seed=None, **fields):
    spec = VariantSpec(name="sample", base="drive", **fields)
    task = driving_doc.task("drive")
    return generate_variants(
        task, spec, driving_doc.world, driving_doc.body("car"), count=count, seed=seed
    )


class TestDistribution:
    """Test cases for Distribution"""

    def test_number_is_fixed(self):
        """Test that a bare number validates as a fixed value"""
        dist = Distribution.model_validate(3)
        assert dist == Distribution.fixed(3.0)
        assert dist.support == (3.0, 3.0)
        assert dist.sample(np.random.default_rng(0)) == 3.0

    @pytest.mark.parametrize(
        "kind,params",
        [
            ("uniform", (2.0, 1.0)),
            ("gauss", (0.0, -1.0)),
            ("uniform", (1.0,)),
            ("fixed", (float("inf"),)),
        ],
    )
    def test_invalid(self, kind, params):
        """Test parameter validation"""
        with pytest.raises(ValidationError):
            Distribution(kind=kind, params=params)

    def test_support(self):
        """Test the sampled ranges"""
        assert Distribution(kind="uniform", params=(0, 4)).support == (0.0, 4.0)
        assert Distribution(kind="gauss", params=(1, 0)).support == (1.0, 1.0)
        assert Distribution(kind="gauss", params=(1, 2)).support == (-np.inf, np.inf)


class TestVariantSpec:
    """Test cases for VariantSpec validation"""

    def test_defaults(self):
        """Test the VariantSpec defaults"""
        spec = VariantSpec(name="v", base="drive")
        assert spec.count == 1
        assert spec.seed == 0
        assert spec.after == []

    @pytest.mark.parametrize(
        "fields",
        [
            {"name": "1bad"},
            {"count": 0},
            {"channels": {"motor:power": {}}},
            {"channels": {"sensor:position": {"latency": -1}}},
            {"colour": "red"},
        ],
    )
    def test_invalid(self, fields):
        """Test rejected specs"""
        values = {"name": "v", "base": "drive", **fields}
        with pytest.raises(ValidationError):
            VariantSpec(**values)

    def test_channel_patch(self):
        """Test patching only the given channel fields"""
        patched = ChannelPatch(latency=3).apply(Channel("x", noise_sigma=0.2))
        assert patched == Channel("x", noise_sigma=0.2, latency=3)


class TestSampleVariants:
    """Test cases for the variants in the driving sample"""

    def test_scattered_starts(self, driving_doc):
        """Test drawn start positions and their tags"""
        variants = expand_variants(driving_doc, driving_doc.variant("scattered"))
        assert [v.name for v in variants] == [f"drive__scattered_{i}" for i in range(5)]
        for index, variant in enumerate(variants):
            position = variant.start["position"]
            assert 0 <= position <= 4
            assert variant.tags["start_position"] == position
            assert variant.tags["variant"] == "scattered"
            assert variant.tags["variant_index"] == float(index)
        assert len({v.start["position"] for v in variants}) == 5

    def test_reproducible(self, driving_doc):
        """Test that the seed fixes the draws"""
        spec = driving_doc.variant("scattered")
        assert expand_variants(driving_doc, spec) == expand_variants(driving_doc, spec)
        assert expand_variants(driving_doc, spec, seed=8) != expand_variants(
            driving_doc, spec
        )
        assert len(expand_variants(driving_doc, spec, count=2)) == 2

    def test_prefix_is_stable(self, driving_doc):
        """Test that drawing more variants keeps the earlier ones"""
        spec = driving_doc.variant("scattered")
        assert expand_variants(driving_doc, spec, count=8)[:5] == expand_variants(
            driving_doc, spec
        )

    def test_friction(self, driving_doc):
        """Test that parameters are substituted into the added dynamics"""
        (variant,) = expand_variants(driving_doc, driving_doc.variant("friction"))
        (rule,) = variant.after
        assert rule.target == "velocity"
        assert "mu" not in str(rule)
        assert "0.1" in str(rule)
        assert variant.tags["mu"] == 0.1

    def test_channel_overrides(self, driving_doc):
        """Test sensor and actuator patches"""
        (noisy,) = expand_variants(driving_doc, driving_doc.variant("noisy"))
        assert noisy.channels["sensor:position"].noise_sigma == 0.5
        (laggy,) = expand_variants(driving_doc, driving_doc.variant("laggy"))
        assert laggy.channels["sensor:position"] == Channel(
            "position", resolution=0.5, latency=10
        )
        assert laggy.channels["actuator:power"].resolution == 1.0
        _, body = driving_doc.resolve(laggy)
        assert body.sensor("position").latency == 10

    def test_extra_goals(self, driving_doc):
        """Test that extra goals are conjoined with the base problem"""
        (stop,) = expand_variants(driving_doc, driving_doc.variant("stop"))
        extra = AtomicProblem(
            goals=(parse_goal("goal velocity < 0.05, position > 10"),)
        )
        assert stop.problem == Conjunction((driving_doc.task("drive").problem, extra))
        assert len(stop.after) == 1


class TestGenerateVariants:
    """Test cases for generate_variants"""

    def test_start_modes(self, driving_doc):
        """Test replacing, offsetting and scaling start values"""
        for mode, expected in (("set", 3.0), ("offset", 5.0), ("scale", 6.0)):
            perturbation = StartPerturbation(mode=mode, value=Distribution.fixed(3.0))
            (variant,) = draw(driving_doc, start={"position": perturbation})
            assert variant.start["position"] == expected

    def test_gauss_start_is_kept_in_domain(self, driving_doc):
        """Test rejection sampling against the variable's domain"""
        gauss = StartPerturbation(value=Distribution(kind="gauss", params=(0, 1)))
        variants = draw(driving_doc, count=20, start={"position": gauss})
        assert all(v.start["position"] >= 0 for v in variants)

    def test_deadline_scale(self, driving_doc):
        """Test scaling the deadline"""
        scale = Distribution(kind="uniform", params=(0.5, 1))
        variants = draw(driving_doc, count=4, deadline_scale=scale)
        for variant in variants:
            assert 10 <= variant.deadline <= 20
            scale = variant.tags["deadline_scale"]
            assert variant.deadline == pytest.approx(20 * scale)

    def test_energy_scale(self, driving_doc):
        """Test scaling the energy above the floor"""
        (variant,) = draw(driving_doc, energy_scale=0.5)
        assert variant.start["energy"] == 5.0

    def test_goal_and_failure_lines(self, driving_doc):
        """Test extra failure states"""
        (variant,) = draw(driving_doc, goals=["fail velocity > 5"])
        extra = variant.problem.children[1]
        assert extra.goals == ()
        assert extra.failures == (parse_goal("fail velocity > 5"),)

    def test_parameter_shadows_variable(self, driving_doc):
        """Test that parameters cannot reuse world variable names"""
        with pytest.raises(VariantError) as info:
            draw(driving_doc, params={"mass": 1})
        assert info.value.variable == "mass"

    def test_start_range_outside_domain(self, driving_doc):
        """Test a bounded draw that leaves the domain"""
        spread = StartPerturbation(value=Distribution(kind="uniform", params=(-5, 1)))
        with pytest.raises(VariantError) as info:
            draw(driving_doc, start={"position": spread})
        assert info.value.variable == "position"

    def test_unknown_start_variable(self, driving_doc):
        """Test perturbing a variable the world lacks"""
        with pytest.raises(VariantError):
            draw(driving_doc, start={"nope": StartPerturbation(value=1)})

    def test_count(self, driving_doc):
        """Test that at least one variant is drawn"""
        with pytest.raises(VariantError):
            draw(driving_doc, count=0)

    def test_duplicate_dynamics_addition(self, driving_doc):
        """Test two additions for one variable"""
        with pytest.raises(VariantError) as info:
            draw(driving_doc, after=["velocity <- velocity", "velocity <- 0"])
        assert info.value.variable == "velocity"

    def test_unknown_channel(self, driving_doc):
        """Test patching a channel the body does not have"""
        with pytest.raises(VariantError):
            draw(driving_doc, channels={"sensor:velocity": ChannelPatch(noise_sigma=1)})

    def test_invalid_variant_task(self, driving_doc):
        """Test an addition that refers to an unknown name"""
        with pytest.raises(VariantError) as info:
            draw(driving_doc, after=["velocity <- velocity * k"])
        assert info.value.variable == "sample"


if __name__ == "__main__":
    pytest.main([__file__])
