import math

import numpy as np
import pytest
from PIL import Image
from scipy.constants import speed_of_light

from thzrrf.apps.rendering.enums import RenderMode
from thzrrf.apps.rendering.heatmaps import PIXEL_SCALE, write_heatmaps
from thzrrf.apps.rendering.services import (
    blend_ray, build_blend_cache, pseudo_surface, render_ray, render_ray_terms, render_spectra,
    render_spectrum, render_spectrum_oracle,
)
from thzrrf.common.geometry import RotationQ
from tests.factories import build_field

WAVELENGTH = speed_of_light / 3.0e11


def friis(distance):
    return (WAVELENGTH / (4.0 * math.pi * distance)) ** 2


@pytest.fixture
def single_gaussian():
    """One Gaussian at (3, 0, 0) with the transmitter at the origin."""
    return build_field([[3.0, 0.0, 0.0]], scales=0.1, densities=0.693)


class TestBlendRay:
    def test_transmittance_after_ln2(self):
        """Test that a ln 2 effective density halves the transmittance."""
        field = build_field([[3.0, 0.0, 0.0], [1.0, 0.0, 0.0]], densities=[math.log(2.0), 0.8])
        gaussians, alpha, transmittance, depth = blend_ray(field, [5.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
        assert gaussians.tolist() == [0, 1]
        assert np.allclose(depth, [2.0, 4.0])
        assert transmittance[0] == 1.0
        assert transmittance[1] == pytest.approx(0.5, rel=1e-12)

    def test_cutoffs_drop_terms(self):
        """Test that faint Gaussians and Gaussians behind opaque ones are not blended."""
        field = build_field([[3.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
                            densities=[1e-9, 20.0, 0.5])
        gaussians, *_ = blend_ray(field, [5.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
        assert gaussians.tolist() == [1]

    def test_farther_gaussian_can_dominate(self):
        """Test that the pseudo-surface is the largest alpha * T, not the nearest."""
        field = build_field([[3.0, 0.0, 0.0], [1.0, 0.0, 0.0]], densities=[0.4, 0.9],
                            tx=(1.0, 2.0, 0.0))
        context = pseudo_surface(field, [5.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
        assert 0.9 * math.exp(-0.4) > 0.4
        assert context.dominant_gaussian_index == 1
        assert context.l_prev == pytest.approx(2.0)
        assert np.allclose(context.aod, [0.0, -1.0, 0.0])
        assert context.dominant_view_depth == pytest.approx(4.0)

    def test_zero_density_is_miss(self):
        field = build_field([[3.0, 0.0, 0.0]], densities=0.0)
        assert pseudo_surface(field, [5.0, 0.0, 0.0], [-1.0, 0.0, 0.0]) is None


class TestRenderRay:
    def test_single_gaussian_full_path(self, single_gaussian):
        """Test gain and ToF of one Gaussian at view depth 2 m behind a 3 m prior path."""
        ray = render_ray(single_gaussian, [0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        assert ray.path_gain == pytest.approx(0.693 * friis(5.0), rel=1e-9)
        assert ray.path_gain == pytest.approx(1.753e-10, rel=1e-3)
        assert ray.tof == pytest.approx(16.678e-9, rel=1e-4)
        assert np.allclose(ray.aod, [1.0, 0.0, 0.0])

    def test_blend_terms(self, single_gaussian):
        ray, terms = render_ray_terms(single_gaussian, [0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        assert len(terms) == 1
        assert terms[0].weight == pytest.approx(0.693)
        assert terms[0].view_depth == pytest.approx(2.0)
        assert terms[0].path_gain == pytest.approx(friis(5.0))

    def test_miss(self):
        """Test that a ray facing away from every Gaussian renders nothing."""
        field = build_field([[-1.0, 0.0, 0.0], [-2.0, 1.0, 0.0]], densities=0.9)
        ray = render_ray(field, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
        assert ray.is_miss
        assert ray.path_gain == 0.0
        assert ray.tof == 0.0
        assert np.array_equal(ray.aod, np.zeros(3))

    def test_inverse_square(self, single_gaussian):
        """Test that doubling the total path length quarters the gain."""
        near = render_ray(single_gaussian, [0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        far = render_ray(single_gaussian, [0.0, 0.0, 0.0], [10.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        assert near.path_gain / far.path_gain == pytest.approx(4.0, rel=1e-9)

    def test_full_path_tof_follows_receiver(self, single_gaussian):
        """Test that full-path ToF tracks the receiver while legacy ToF does not."""
        calibration = np.array([1.0])
        for distance in (5.0, 7.0):
            rx = [distance, 0.0, 0.0]
            full = render_ray(single_gaussian, [0.0, 0.0, 0.0], rx, [1.0, 0.0, 0.0])
            legacy = render_ray(single_gaussian, [0.0, 0.0, 0.0], rx, [1.0, 0.0, 0.0],
                                RenderMode.LEGACY, calibration)
            assert full.tof == pytest.approx(distance / speed_of_light, rel=1e-12)
            assert legacy.tof == pytest.approx(4.0 / speed_of_light, rel=1e-12)

    def test_tof_at_random_depths(self, single_gaussian):
        """Test exact full-path ToF and biased legacy ToF at ten random receiver depths."""
        calibration = np.array([1.0])
        rng = np.random.default_rng(21)
        for distance in rng.uniform(3.5, 12.0, size=10):
            rx = [distance, 0.0, 0.0]
            full = render_ray(single_gaussian, [0.0, 0.0, 0.0], rx, [1.0, 0.0, 0.0])
            legacy = render_ray(single_gaussian, [0.0, 0.0, 0.0], rx, [1.0, 0.0, 0.0],
                                RenderMode.LEGACY, calibration)
            assert abs(full.tof - distance / speed_of_light) <= 1e-12
            legacy_error = legacy.tof - distance / speed_of_light
            assert legacy_error == pytest.approx((4.0 - distance) / speed_of_light, rel=1e-9)
            assert abs(legacy_error) > 1e-12

    def test_legacy_needs_calibration(self, single_gaussian):
        with pytest.raises(ValueError, match='calibration'):
            render_ray(single_gaussian, [0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.0, 0.0, 0.0],
                       RenderMode.LEGACY)

    def test_directional_gain(self):
        """Test that the SH gain is evaluated in the render direction."""
        sh = np.zeros((1, 4))
        sh[0, 3] = 1.0  # Y_1^1 grows along +x
        field = build_field([[3.0, 0.0, 0.0]], densities=0.693, sh=sh)
        toward = render_ray(field, [0.0, 0.0, 0.0], [5.0, 0.0, 0.0], [1.0, 0.0, 0.0])
        away = render_ray(field, [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0])
        assert toward.path_gain > away.path_gain


class TestRenderSpectrum:
    def test_single_pixel_hit(self, grid_small):
        """Test that a small Gaussian straight along one pixel's direction lights only that pixel."""
        rx = np.array([0.0, 0.0, 1.0])
        center = rx + 2.0 * grid_small.pixel_to_dir(2, 5)
        field = build_field([center], scales=0.1, densities=0.693, tx=center + [0.0, 0.0, 3.0])
        spectrum = render_spectrum(field, rx, RotationQ.identity(), grid_small)
        assert spectrum.hit_mask.sum() == 1
        assert spectrum.hit_mask[2, 5]
        assert spectrum.path_gain[2, 5] == pytest.approx(0.693 * friis(5.0), rel=1e-9)
        assert spectrum.tof[2, 5] == pytest.approx(5.0 / speed_of_light, rel=1e-9)
        assert spectrum.aod_el[2, 5] == pytest.approx(-math.pi / 2)

    def test_matches_oracle(self, smoke_field, smoke_dataset, grid_small):
        """Test that the splatted renderer agrees with per-pixel ray marching."""
        rng = np.random.default_rng(3)
        field = smoke_field.with_sh(rng.normal(scale=0.3, size=smoke_field.sh.shape))
        sample = smoke_dataset[0]
        fast = render_spectrum(field, sample.rx_position, sample.rx_orientation, grid_small)
        oracle = render_spectrum_oracle(field, sample.rx_position, sample.rx_orientation, grid_small)
        assert fast.hit_mask.any()
        assert np.array_equal(fast.hit_mask, oracle.hit_mask)
        scale = oracle.path_gain.max()
        assert np.allclose(fast.path_gain, oracle.path_gain, rtol=1e-6, atol=1e-6 * scale)
        assert np.allclose(fast.tof, oracle.tof, rtol=1e-6, atol=0.0)
        assert np.allclose(fast.aod_az, oracle.aod_az, atol=1e-9)
        assert np.allclose(fast.aod_el, oracle.aod_el, atol=1e-9)

    def test_legacy_matches_oracle(self, smoke_field, smoke_dataset, grid_small):
        calibration = np.linspace(0.5, 2.0, len(smoke_field))
        sample = smoke_dataset[1]
        fast = render_spectrum(smoke_field, sample.rx_position, sample.rx_orientation, grid_small,
                               RenderMode.LEGACY, calibration)
        oracle = render_spectrum_oracle(smoke_field, sample.rx_position, sample.rx_orientation, grid_small,
                                        RenderMode.LEGACY, calibration)
        scale = oracle.path_gain.max()
        assert np.allclose(fast.path_gain, oracle.path_gain, rtol=1e-6, atol=1e-6 * scale)
        assert np.allclose(fast.tof, oracle.tof, rtol=1e-6, atol=0.0)

    def test_rotated_pose_matches_oracle(self, smoke_field, smoke_dataset, grid_small):
        """Test splatted and per-pixel rendering agree for a tilted receiver."""
        rng = np.random.default_rng(4)
        field = smoke_field.with_sh(rng.normal(scale=0.3, size=smoke_field.sh.shape))
        orientation = RotationQ.from_axis_angle([0.3, 1.0, 0.2], 0.7)
        rx = smoke_dataset[2].rx_position
        fast = render_spectrum(field, rx, orientation, grid_small)
        oracle = render_spectrum_oracle(field, rx, orientation, grid_small)
        assert fast.hit_mask.any()
        assert np.array_equal(fast.hit_mask, oracle.hit_mask)
        scale = oracle.path_gain.max()
        assert np.allclose(fast.path_gain, oracle.path_gain, rtol=1e-6, atol=1e-6 * scale)
        assert np.allclose(fast.tof, oracle.tof, rtol=1e-6, atol=0.0)

    def test_pixels_follow_receiver_orientation(self, grid_small):
        """Test that a Gaussian along a rotated pixel direction lights that pixel in the rotated frame."""
        orientation = RotationQ.from_axis_angle([0.0, 0.0, 1.0], 1.1)
        rx = np.array([0.0, 0.0, 1.0])
        center = rx + 2.0 * orientation.apply(grid_small.pixel_to_dir(2, 5))
        field = build_field([center], scales=0.1, densities=0.693, tx=center + [0.0, 0.0, 3.0])
        rotated = render_spectrum(field, rx, orientation, grid_small)
        assert rotated.hit_mask.sum() == 1
        assert rotated.hit_mask[2, 5]
        assert rotated.path_gain[2, 5] == pytest.approx(0.693 * friis(5.0), rel=1e-9)
        assert not render_spectrum(field, rx, RotationQ.identity(), grid_small).hit_mask[2, 5]

    def test_empty_field(self, grid_small):
        field = build_field(np.zeros((0, 3)))
        spectrum = render_spectrum(field, [0.0, 0.0, 0.0], None, grid_small)
        assert not spectrum.hit_mask.any()
        assert np.all(spectrum.tof == 0.0)

    def test_cache_terms_sorted(self, smoke_field, smoke_dataset, grid_small):
        """Test that cache terms run by pixel then view depth."""
        sample = smoke_dataset[2]
        cache = build_blend_cache(smoke_field, sample.rx_position, sample.rx_orientation, grid_small)
        key = cache.pixel * 1e6 + cache.depth
        assert np.all(np.diff(cache.pixel) >= 0)
        assert np.all(np.diff(key) >= 0)
        assert np.all(cache.weight > 0.0)

    def test_render_spectra_keeps_order(self, smoke_field, smoke_dataset, grid_small):
        poses = [(s.rx_position, s.rx_orientation) for s in smoke_dataset]
        spectra = render_spectra(smoke_field, poses, grid_small, threads=3)
        for sample, spectrum in zip(smoke_dataset, spectra):
            assert np.array_equal(spectrum.rx_position, sample.rx_position)
            single = render_spectrum(smoke_field, sample.rx_position, sample.rx_orientation, grid_small)
            assert np.array_equal(spectrum.path_gain, single.path_gain)


class TestHeatmaps:
    def test_writes_three_channels(self, smoke_field, smoke_dataset, grid_small, tmp_path):
        sample = smoke_dataset[0]
        spectrum = render_spectrum(smoke_field, sample.rx_position, sample.rx_orientation, grid_small)
        paths = write_heatmaps(spectrum, tmp_path, 'sample_00000')
        assert set(paths) == {'gain_db', 'tof_ns', 'aod_az_deg'}
        for channel, path in paths.items():
            assert path.name == f'sample_00000_{channel}.png'
            with Image.open(path) as image:
                assert image.size == (grid_small.n_az * PIXEL_SCALE, grid_small.n_el * PIXEL_SCALE)
