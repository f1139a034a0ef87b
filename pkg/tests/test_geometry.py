import math

import numpy as np
import pytest

from thzrrf.common.geometry import (
    RotationQ, SphericalGrid, az_el_to_dir, dir_to_az_el, is_unit, normalize, rotate, unit_dir,
)
from thzrrf.common.harmonics import MAX_SH_DEGREE, sh_basis, sh_coefficient_count


def random_dirs(n, seed=0):
    rng = np.random.default_rng(seed)
    return normalize(rng.normal(size=(n, 3)))


class TestDirections:
    def test_unit_dir_normalizes(self):
        """Test that unit_dir returns a unit vector."""
        d = unit_dir([3.0, 0.0, 4.0])
        assert np.allclose(d, [0.6, 0.0, 0.8])
        assert is_unit(d)

    def test_unit_dir_rejects_zero(self):
        """Test that a zero vector is not a direction."""
        with pytest.raises(ValueError):
            unit_dir([0.0, 0.0, 0.0])

    def test_az_el_round_trip(self):
        """Test azimuth/elevation conversion both ways."""
        dirs = random_dirs(100)
        az, el = dir_to_az_el(dirs)
        assert np.allclose(az_el_to_dir(az, el), dirs, atol=1e-12)


class TestSphericalGrid:
    def test_zenith_maps_to_top_row(self):
        """Test that +z lands in row 0."""
        row, _ = SphericalGrid(4, 8).dir_to_pixel([0.0, 0.0, 1.0])
        assert row == 0

    def test_x_axis_pixel(self):
        """Test the bin of +x on a 4 x 8 grid."""
        assert SphericalGrid(4, 8).dir_to_pixel([1.0, 0.0, 0.0]) == (2, 4)

    def test_pixel_round_trip_is_identity(self):
        """Test pixel_to_dir followed by dir_to_pixel on every bin."""
        grid = SphericalGrid(8, 16)
        for row in range(grid.n_el):
            for col in range(grid.n_az):
                assert grid.dir_to_pixel(grid.pixel_to_dir(row, col)) == (row, col)

    def test_bin_center_within_one_bin(self):
        """Test that a direction's bin center is less than one bin away."""
        grid = SphericalGrid(8, 16)
        dirs = random_dirs(500, seed=3)
        rows, cols = grid.dirs_to_pixels(dirs)
        centers = np.array([grid.pixel_to_dir(r, c) for r, c in zip(rows, cols)])
        angles = np.arccos(np.clip(np.sum(dirs * centers, axis=1), -1.0, 1.0))
        assert np.all(angles < max(grid.az_step, grid.el_step))

    def test_directions_match_pixel_to_dir(self):
        """Test the cached direction table against per-pixel evaluation."""
        grid = SphericalGrid(4, 8)
        assert grid.directions.shape == (4, 8, 3)
        assert np.allclose(grid.directions[1, 5], grid.pixel_to_dir(1, 5))

    def test_invalid_grid(self):
        """Test that empty grids are rejected."""
        with pytest.raises(ValueError):
            SphericalGrid(0, 8)

    def test_pixel_out_of_range(self):
        with pytest.raises(ValueError):
            SphericalGrid(4, 8).pixel_to_dir(4, 0)


class TestRotation:
    def test_identity(self):
        """Test that the identity leaves vectors unchanged."""
        assert np.allclose(rotate(RotationQ.identity(), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])

    def test_quarter_turn_about_z(self):
        """Test a 90 degree rotation about z."""
        q = RotationQ.from_axis_angle([0.0, 0.0, 1.0], math.pi / 2)
        assert np.allclose(rotate(q, [1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)

    def test_norm_preserved(self):
        """Test that random rotations preserve vector length."""
        rng = np.random.default_rng(11)
        for _ in range(1000):
            q = RotationQ.from_components(*rng.normal(size=4))
            v = rng.normal(size=3)
            assert abs(np.linalg.norm(rotate(q, v)) - np.linalg.norm(v)) < 1e-12

    def test_matrix_is_proper(self):
        """Test that the rotation matrix has determinant +1."""
        q = RotationQ.from_components(0.3, -0.2, 0.9, 0.1)
        assert abs(np.linalg.det(q.to_matrix()) - 1.0) < 1e-9

    def test_non_unit_quaternion_rejected(self):
        with pytest.raises(ValueError):
            RotationQ(1.0, 1.0, 0.0, 0.0)

    def test_compose_and_conjugate(self):
        """Test that a rotation composed with its conjugate is the identity."""
        q = RotationQ.from_axis_angle([1.0, 1.0, 0.0], 0.7)
        v = np.array([0.2, -0.4, 0.9])
        assert np.allclose((q * q.conjugate()).apply(v), v, atol=1e-12)


class TestSphericalHarmonics:
    def test_band_zero_constant(self):
        """Test the constant basis value."""
        values = sh_basis(0, random_dirs(10))
        assert values.shape == (10, 1)
        assert np.allclose(values, 0.2820948, atol=1e-7)

    def test_band_one_at_pole(self):
        """Test band-1 values at +z."""
        values = sh_basis(1, [0.0, 0.0, 1.0])
        assert np.allclose(values[1:], [0.0, 0.4886025, 0.0], atol=1e-7)

    def test_band_one_on_x_axis(self):
        values = sh_basis(1, [1.0, 0.0, 0.0])
        assert abs(values[1]) < 1e-12
        assert abs(values[2]) < 1e-12
        assert abs(abs(values[3]) - 0.4886025) < 1e-7

    def test_orthonormal_monte_carlo(self):
        """Test orthonormality of the basis by Monte-Carlo integration."""
        dirs = random_dirs(200_000, seed=5)
        basis = sh_basis(2, dirs)
        gram = basis.T @ basis / len(dirs)
        assert np.abs(gram - np.eye(sh_coefficient_count(2)) / (4.0 * math.pi)).max() < 1e-2

    def test_degree_bounds(self):
        """Test that degrees outside the supported range are rejected."""
        with pytest.raises(ValueError):
            sh_basis(MAX_SH_DEGREE + 1, [0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            sh_basis(-1, [0.0, 0.0, 1.0])
