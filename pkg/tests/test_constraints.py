import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from mipr3d.constraints import (
    ConstraintSet,
    PlaneConstraint,
    apply,
    grow,
    loose_mask,
    mask_components,
    object_mask,
    tight_mask,
)
from mipr3d.errors import NoComponentError, UsageError
from mipr3d.forward import RecordingGeometry, backpropagate, record
from mipr3d.mipr import MiprConfig, reconstruct
from mipr3d.samplegen import sphere_phantom
from mipr3d.wavefield import ComplexField, Grid

G = Grid(64, 1.0, 0.532)


def disc(n, radius, row=None, col=None):
    j = np.arange(n)
    row = n // 2 if row is None else row
    col = n // 2 if col is None else col
    return np.hypot(j[:, None] - row, j[None, :] - col) < radius


def test_fixed_point_unchanged():
    c = PlaneConstraint(amplitude_max=1.0, phase_mode="zero")
    t = np.full(G.shape, 0.7 + 0j)
    out = apply(c, ComplexField(G, t))
    np.testing.assert_array_equal(out.values, t)


def test_amplitude_threshold():
    t = np.full(G.shape, 1.3 * np.exp(0.4j))
    free = PlaneConstraint(amplitude_max=1.0).project(t)
    np.testing.assert_allclose(np.abs(free), 1.0)
    np.testing.assert_allclose(np.angle(free), 0.4)
    zero = PlaneConstraint(amplitude_max=1.0, phase_mode="zero").project(t)
    np.testing.assert_allclose(zero, 1.0)


def test_bilayer_rules():
    c = PlaneConstraint(amplitude_fixed=1.0, phase_mode="clamp", phase_max=0.5)
    out = c.project(np.array([[0.8 * np.exp(0.9j), 0.8 * np.exp(-0.3j)]]))
    np.testing.assert_allclose(out, [[np.exp(0.5j), 1.0]])


def test_support_rule_exact():
    mask = np.zeros(G.shape, bool)
    mask[20:40, 20:40] = True
    c = PlaneConstraint(support=mask, outside_value=1.0)
    t = np.random.default_rng(0).normal(size=G.shape) * (1 + 1j)
    out = c.project(t)
    assert np.all(out[~mask] == 1.0)
    np.testing.assert_array_equal(out[mask], t[mask])


def test_constraint_validation():
    with pytest.raises(UsageError):
        PlaneConstraint(phase_mode="clamp")
    with pytest.raises(UsageError):
        PlaneConstraint(amplitude_max=0)
    with pytest.raises(UsageError):
        PlaneConstraint(phase_mode="bogus")
    with pytest.raises(TypeError):
        ConstraintSet([object()])


constraint_strategy = st.builds(
    PlaneConstraint,
    support=st.none() | st.just(np.arange(64).reshape(8, 8) % 3 == 0),
    outside_value=st.sampled_from([1.0, 0.5j, 2.0]),
    amplitude_max=st.none() | st.floats(0.1, 2.0),
    phase_mode=st.sampled_from(["free", "zero"]),
    amplitude_fixed=st.none() | st.floats(0.0, 2.0),
) | st.builds(
    PlaneConstraint,
    phase_mode=st.just("clamp"),
    phase_max=st.floats(0, 3.0),
    amplitude_max=st.none() | st.floats(0.1, 2.0),
    amplitude_fixed=st.none() | st.floats(0.0, 2.0),
)


@settings(max_examples=200, deadline=None)
@given(c=constraint_strategy, seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 10),
       single=st.booleans())
def test_projection_idempotent_and_bounded(c, seed, scale, single):
    rng = np.random.default_rng(seed)
    t = scale * (rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))
    if single:
        t = t.astype(np.complex64)
    once = c.project(t)
    twice = c.project(once)
    assert once.dtype == t.dtype
    np.testing.assert_array_equal(twice, once)
    bounds = [abs(c.outside_value) if c.support is not None else 0.0]
    if c.amplitude_fixed is not None:
        bounds.append(c.amplitude_fixed)
    elif c.amplitude_max is not None:
        bounds.append(c.amplitude_max)
    else:
        bounds.append(np.abs(t).max())
    assert np.abs(once).max() <= max(bounds) * (1 + 1e-6)


def test_loose_mask_disc_area():
    n = 200
    d = disc(n, 10)  # 20 px diameter
    field = np.where(d, 0.0, 1.0)
    mask = loose_mask(field, scale=4)
    ratio = mask.sum() / d.sum()
    assert 3.5 <= ratio <= 4.5
    assert np.all(mask[d])


def test_loose_mask_scale_one_is_one_pixel_growth():
    d = disc(64, 6)
    mask = loose_mask(np.where(d, 0.0, 1.0), scale=1)
    expected = ndimage.binary_dilation(d, ndimage.generate_binary_structure(2, 1))
    np.testing.assert_array_equal(mask, expected)


def test_loose_mask_saturates():
    mask = loose_mask(np.zeros((16, 16)), scale=4)
    assert mask.all()


def test_loose_mask_empty_footprint_warns():
    with pytest.warns(UserWarning):
        mask = loose_mask(np.ones((16, 16)), scale=4)
    assert mask.all()
    with pytest.raises(UsageError):
        loose_mask(np.zeros((16, 16)), scale=0.5)


def test_tight_mask_from_clean_sphere_reconstruction():
    grid = Grid(128, 1.0, 0.532)
    stack = sphere_phantom(grid, [(0, 0, 0)], 20, 0.1, 0.5)
    m = record(stack, RecordingGeometry("hologram", 200.0))
    t0 = stack.transmissions[0]
    cfg = MiprConfig(iterations=500, constraints=ConstraintSet([PlaneConstraint(support=loose_mask(t0))]))
    recon = reconstruct(m, stack.z, cfg).stack.transmissions[0]
    mask = tight_mask(recon)
    truth = np.abs(t0 - 1) > 0
    assert (mask & truth).sum() >= 0.95 * truth.sum()
    assert mask.sum() <= 1.5 * truth.sum()


def test_tight_mask_two_spheres_two_components():
    grid = Grid(400, 1.0, 0.532)
    stack = sphere_phantom(grid, [(-50, 0, 0), (50, 0, 0)], 20, 0.1, 0.5)
    m = record(stack, RecordingGeometry("hologram", 200.0))
    comps = mask_components(backpropagate(m, 0.0))
    assert len(comps) == 2
    left, right = sorted(comps, key=lambda c: np.argwhere(c)[:, 1].mean())
    assert left[200, 150] and right[200, 250]


def test_mask_components_min_size_and_closing():
    field = np.ones((64, 64), complex)
    ring = disc(64, 10) & ~disc(64, 7)
    ring[32, 32:] = False  # a gap in the ring
    field[ring] = 0.5
    field[5, 5] = 0.5  # isolated speck
    comps = mask_components(field, dilation=0, min_size=4)
    assert len(comps) == 1 and not comps[0][32, 32]
    closed = mask_components(field, dilation=0, min_size=4, closing=2)
    assert len(closed) == 1 and closed[0][32, 32]  # gap bridged, hole filled


def test_object_mask_uses_local_maximum():
    field = np.ones((128, 128), complex)
    strong, weak = disc(128, 8, 40, 40), disc(128, 8, 90, 90)
    field[strong] = np.exp(1.0j)
    field[weak] = np.exp(0.1j)
    with pytest.raises(AssertionError):
        assert tight_mask(field, dilation=0)[90, 90]
    mask = object_mask(field, (90, 90), window=20, dilation=0)
    np.testing.assert_array_equal(mask, weak)


def test_tight_mask_uniform_field():
    with pytest.raises(NoComponentError):
        tight_mask(np.ones((32, 32), complex))


def test_grow_is_a_disc():
    m = np.zeros((21, 21), bool)
    m[10, 10] = True
    g = grow(m, 5)
    rows, cols = np.nonzero(g)
    assert np.all(np.hypot(rows - 10, cols - 10) <= 5)
    assert g.sum() == sum(1 for i in range(-5, 6) for j in range(-5, 6) if i * i + j * j <= 25)
    assert g[10, 15] and g[14, 13] and not g[14, 14]
    assert grow(m, 0) is m
