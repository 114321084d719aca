import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wrinkle_attack.field import (centers_for_gene, oscillator, sample_centers,
                                  scale_component, total_field)
from wrinkle_attack.genes import ScaleMask, ScaleParams, WrinkleGene, AppearanceParams

COUNTS = {"large": 2, "medium": 4, "small": 6}


def make_gene(mask=ScaleMask(), seed=42, a_l=0.6, a_m=0.5, a_s=0.4):
    return WrinkleGene(
        large=ScaleParams(a_l, 2, 2.0, (2.0,)),
        medium=ScaleParams(a_m, 4, 3.0, (3.0, 4.0)),
        small=ScaleParams(a_s, 6, 5.0, (6.0,)),
        gain_u=0.5, gain_v=0.5,
        appearance=AppearanceParams(base=0.6, amplitude=0.3),
        center_seed=seed, mask=mask,
    )


def test_sample_centers_deterministic():
    a = sample_centers(COUNTS, seed=99)
    b = sample_centers(COUNTS, seed=99)
    assert a == b
    assert sample_centers(COUNTS, seed=100) != a


def test_sample_centers_counts_and_range():
    centers = sample_centers(COUNTS, seed=1)
    assert len(centers.large) == 2
    assert len(centers.medium) == 4
    assert len(centers.small) == 6
    for scale in ("large", "medium", "small"):
        for cu, cv in centers.for_scale(scale):
            assert 0.0 <= cu <= 1.0 and 0.0 <= cv <= 1.0


def test_scale_streams_independent():
    # Changing one scale's layer count must not move another scale's centers.
    few = sample_centers({"large": 2, "medium": 4, "small": 6}, seed=5)
    many = sample_centers({"large": 2, "medium": 6, "small": 6}, seed=5)
    assert few.large == many.large
    assert few.small == many.small


def test_center_uniformity_monte_carlo():
    # Oracle: empirical mean of U[0,1] draws should sit near 0.5.
    centers = sample_centers({"large": 10_000, "medium": 1, "small": 1}, seed=3)
    us = np.array([c[0] for c in centers.large])
    vs = np.array([c[1] for c in centers.large])
    assert abs(us.mean() - 0.5) < 0.02
    assert abs(vs.mean() - 0.5) < 0.02


def test_oscillator_values():
    assert oscillator("large", 0.0, (2.0,)) == 0.0
    assert oscillator("medium", 0.0, (3.0, 4.0)) == 0.5
    assert abs(oscillator("large", 0.5, (2.0,))) < 1e-12  # sin(pi)


@settings(max_examples=60)
@given(d=st.floats(0, 5), f1=st.floats(0.1, 12), f2=st.floats(0.1, 12))
def test_oscillator_bounded(d, f1, f2):
    for scale, freqs in (("large", (f1,)), ("small", (f1,)), ("medium", (f1, f2))):
        assert abs(oscillator(scale, d, freqs)) <= 1.0 + 1e-12


def test_zero_intensity_zero_field():
    params = ScaleParams(0.0, 2, 1.0, (2.0,))
    centers = ((0.2, 0.3), (0.7, 0.8))
    z = scale_component(16, 16, params, centers, "large")
    assert np.array_equal(z, np.zeros((16, 16)))


def test_single_source_center_value_and_symmetry():
    # 33x33 grid puts a pixel center exactly at (0.5, 0.5).
    params = ScaleParams(0.7, 1, 1.5, (2.0,))
    z = scale_component(33, 33, params, ((0.5, 0.5),), "large")
    assert z[16, 16] == 0.0  # sin(0) at the source
    assert np.array_equal(z, z.T)  # isotropic distance on a square grid


def test_superposition_exact():
    # Oracle: a two-source field is the sum of its single-source fields.
    p2 = ScaleParams(0.6, 2, 2.0, (3.0,))
    p1 = ScaleParams(0.6, 1, 2.0, (3.0,))
    c1, c2 = (0.25, 0.4), (0.8, 0.65)
    both = scale_component(24, 20, p2, (c1, c2), "small")
    single_sum = (scale_component(24, 20, p1, (c1,), "small")
                  + scale_component(24, 20, p1, (c2,), "small"))
    scale = np.abs(both).max()
    assert np.abs(both - single_sum).max() <= 1e-12 * max(scale, 1.0)


def test_total_field_additivity():
    gene = make_gene()
    centers = centers_for_gene(gene)
    full = total_field(gene, 20, 20, centers)
    parts = sum(
        scale_component(20, 20, gene.scale(s), centers.for_scale(s), s)
        for s in ("large", "medium", "small")
    )
    scale = np.abs(full).max()
    assert np.abs(full - parts).max() <= 1e-12 * max(scale, 1.0)


def test_mask_only_large_equals_component():
    gene = make_gene(mask=ScaleMask(True, False, False))
    centers = centers_for_gene(gene)
    only = total_field(gene, 16, 16, centers)
    comp = scale_component(16, 16, gene.large, centers.large, "large")
    assert np.array_equal(only, comp)


def test_mask_equals_zero_intensity():
    masked = make_gene(mask=ScaleMask(True, True, False))
    zeroed = make_gene(a_s=0.0)
    assert np.array_equal(total_field(masked, 16, 16), total_field(zeroed, 16, 16))


def test_all_zero_intensities():
    gene = make_gene(a_l=0.0, a_m=0.0, a_s=0.0)
    assert np.array_equal(total_field(gene, 12, 12), np.zeros((12, 12)))


def test_total_field_deterministic():
    gene = make_gene()
    assert np.array_equal(total_field(gene, 16, 16), total_field(gene, 16, 16))


@settings(max_examples=40, deadline=None)
@given(
    intensity=st.floats(0.0, 1.0),
    layers=st.integers(1, 6),
    decay=st.floats(0.0, 8.0),
    freq=st.floats(0.5, 10.0),
    seed=st.integers(0, 2**32),
)
def test_component_amplitude_bound(intensity, layers, decay, freq, seed):
    # |phi| <= 1 and exp(-decay*d) <= 1 bound the field by intensity * layers.
    centers = sample_centers({"large": layers, "medium": 1, "small": 1}, seed).large
    params = ScaleParams(intensity, layers, decay, (freq,))
    z = scale_component(12, 12, params, centers, "large")
    assert np.abs(z).max() <= intensity * layers + 1e-12


def test_center_count_mismatch():
    params = ScaleParams(0.5, 2, 1.0, (2.0,))
    with pytest.raises(ValueError):
        scale_component(12, 12, params, ((0.5, 0.5),), "large")
