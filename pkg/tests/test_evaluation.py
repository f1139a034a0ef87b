from dataclasses import asdict, replace

import numpy as np
import pytest
from django.conf import settings

from thzrrf.apps.evaluation.metrics import PSNR_CAP, db_image, evaluate_spectra, psnr, ssim
from thzrrf.apps.evaluation.services import (
    SWEEP_COLUMNS, SweepConfig, build_pool, format_sweep_table, sweep, write_sweep_table,
)
from thzrrf.apps.evaluation.tasks import run_sweep_cell
from thzrrf.apps.scenes.config import bundled_scene_path, load_scene
from thzrrf.apps.scenes.domain import SpatialSpectrum
from thzrrf.apps.training.config import load_run_config
from thzrrf.common.geometry import SphericalGrid
from tests.factories import SeedConfigFactory, TrainConfigFactory


@pytest.fixture
def db_pair():
    rng = np.random.default_rng(5)
    a = rng.uniform(-150.0, -40.0, size=(16, 32))
    b = a + rng.normal(scale=4.0, size=a.shape)
    return a, b


class TestPsnr:
    def test_identical_is_capped(self, db_pair):
        a, _ = db_pair
        assert psnr(a, a) == PSNR_CAP == 100.0

    def test_half_range_offset(self):
        """Test that a constant offset of half the dynamic range gives 6.0206 dB."""
        a = np.full((8, 8), -120.0)
        assert psnr(a, a + 80.0, 160.0) == pytest.approx(6.0206, abs=1e-4)

    def test_translation_invariant(self, db_pair):
        a, b = db_pair
        assert psnr(a + 7.5, b + 7.5) == pytest.approx(psnr(a, b), rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match='shapes differ'):
            psnr(np.zeros((2, 2)), np.zeros((2, 3)))


class TestSsim:
    def test_identity(self, db_pair):
        a, _ = db_pair
        assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric(self, db_pair):
        a, b = db_pair
        assert ssim(a, b) == pytest.approx(ssim(b, a), rel=1e-12)
        assert ssim(a, b) < 1.0

    def test_negated_structure(self):
        """Test that an image mirrored about the middle of the dB range has SSIM near -1."""
        rng = np.random.default_rng(9)
        a = rng.uniform(-160.0, 0.0, size=(16, 16))
        assert ssim(a, -160.0 - a) < -0.9

    @pytest.mark.parametrize('window', [0, 4])
    def test_invalid_window(self, db_pair, window):
        a, b = db_pair
        with pytest.raises(ValueError, match='window'):
            ssim(a, b, window=window)

    def test_window_larger_than_image(self):
        with pytest.raises(ValueError, match='exceeds'):
            ssim(np.zeros((4, 4)), np.zeros((4, 4)), window=7)


class TestDbImage:
    def test_clamps(self):
        values = db_image(np.array([0.0, 1e-20, 1e-6, 10.0]), -160.0, 0.0)
        assert np.allclose(values, [-160.0, -160.0, -60.0, 0.0])

    def test_bad_range(self):
        with pytest.raises(ValueError):
            db_image(np.ones(2), floor=0.0, ceiling=-10.0)


class TestEvaluateSpectra:
    def test_identical(self, smoke_dataset):
        spectra = [s.spectrum for s in smoke_dataset]
        report = evaluate_spectra(spectra, spectra, window=5)
        assert report.psnr == PSNR_CAP
        assert report.ssim == pytest.approx(1.0)
        assert report.beam_aoa_error_deg == 0.0
        assert report.beam_hit_rate() == 1.0
        assert len(report.as_dict()['samples']) == len(smoke_dataset)

    def test_worse_prediction_scores_lower(self, smoke_dataset):
        truth = [s.spectrum for s in smoke_dataset]
        noisy = []
        for spectrum in truth:
            copy = SpatialSpectrum.empty(spectrum.grid, spectrum.rx_position, spectrum.rx_orientation)
            copy.path_gain[:] = spectrum.path_gain * 10.0
            noisy.append(copy)
        report = evaluate_spectra(noisy, truth, window=5)
        assert report.psnr < PSNR_CAP
        low, high = report.psnr_range
        assert low <= report.psnr <= high

    def test_length_mismatch(self, smoke_dataset):
        spectra = [s.spectrum for s in smoke_dataset]
        with pytest.raises(ValueError, match='predicted spectra'):
            evaluate_spectra(spectra[:2], spectra)


class TestSweep:
    @pytest.fixture
    def tiny(self):
        return dict(sizes=(2, 4), test_size=2, cfg=TrainConfigFactory(epochs=2, batch_size=2),
                    seed_cfg=SeedConfigFactory(), grid=SphericalGrid(8, 16), threads=2)

    def test_pool_split(self, smoke_scene):
        """Test that training subsets are nested and disjoint from the test set."""
        sweep_cfg = SweepConfig(sizes=(2, 4), test_size=3, grid_rows=4, grid_cols=8)
        pool = build_pool(smoke_scene, sweep_cfg, threads=2)
        assert len(pool.dataset) == 7
        small = [s.index for s in pool.training_subset(2)]
        large = [s.index for s in pool.training_subset(4)]
        test = [s.index for s in pool.test_set]
        assert large[:2] == small
        assert not set(large) & set(test)
        with pytest.raises(ValueError, match='exceeds'):
            pool.training_subset(5)

    def test_rows_and_determinism(self, smoke_scene, tiny):
        """Test row order and that a repeated sweep reproduces every metric."""
        rows = sweep(smoke_scene, **tiny)
        assert [(r.size, r.variant) for r in rows] == [
            (2, 'full_path'), (2, 'legacy'), (4, 'full_path'), (4, 'legacy'),
        ]
        for row in rows:
            assert row.psnr_min <= row.psnr_mean <= row.psnr_max
            assert row.ssim_min <= row.ssim_mean <= row.ssim_max
            assert np.isnan(row.beam_hit_rate) or 0.0 <= row.beam_hit_rate <= 1.0
        again = sweep(smoke_scene, **tiny)
        for a, b in zip(rows, again):
            assert (a.psnr_mean, a.ssim_mean, a.psnr_min) == (b.psnr_mean, b.ssim_mean, b.psnr_min)

    def test_table(self, smoke_scene, tiny, tmp_path):
        rows = sweep(smoke_scene, **{**tiny, 'sizes': (2,)})
        path = write_sweep_table(rows, tmp_path / 'sweep.tsv')
        lines = path.read_text().splitlines()
        assert lines[0].split('\t') == list(SWEEP_COLUMNS)
        assert len(lines) == 3
        fields = lines[1].split('\t')
        assert fields[:2] == ['2', 'full_path']
        assert fields[2] == f'{rows[0].psnr_mean:.6f}'
        assert format_sweep_table(rows) == path.read_text()

    def test_task_matches_in_process_cell(self, smoke_scene, tiny):
        """Test that the worker task returns the same row as the in-process sweep."""
        rows = sweep(smoke_scene, **{**tiny, 'sizes': (2,)})
        sweep_options = asdict(SweepConfig(sizes=(2,), test_size=2, grid_rows=8, grid_cols=16))
        result = run_sweep_cell.delay(str(bundled_scene_path('smoke')), 2, 'legacy', sweep_options,
                                      asdict(tiny['cfg']), asdict(tiny['seed_cfg'])).get()
        assert result['variant'] == 'legacy'
        assert result['psnr_mean'] == pytest.approx(rows[1].psnr_mean, rel=1e-12)

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            SweepConfig(sizes=())
        with pytest.raises(ValueError):
            SweepConfig(test_size=0)


@pytest.mark.slow
def test_full_path_beats_legacy(smoke_scene):
    """Test that full-path rendering fits held-out receivers better than the legacy model."""
    rows = sweep(smoke_scene, sizes=(20,), test_size=10, cfg=TrainConfigFactory(epochs=60),
                 seed_cfg=SeedConfigFactory(spacing=0.25), grid=SphericalGrid(16, 32))
    by_variant = {r.variant: r for r in rows}
    assert by_variant['full_path'].psnr_mean > by_variant['legacy'].psnr_mean


@pytest.fixture(scope='module')
def room_sweep():
    """Sweep rows of the bundled room keyed by (size, variant)."""
    config = load_run_config(settings.BASE_DIR / 'configs' / 'train.yaml')
    cfg = replace(config.training, epochs=100, log_every=0)
    rows = sweep(load_scene(bundled_scene_path('room')), sizes=(10, 20, 50, 100), test_size=20,
                 cfg=cfg, seed_cfg=config.seeding, grid=SphericalGrid(16, 32))
    return {(row.size, row.variant): row for row in rows}


@pytest.mark.slow
class TestRoomSweep:
    SIZES = (10, 20, 50, 100)

    def test_full_path_at_least_legacy(self, room_sweep):
        """Test that full-path rendering matches or beats legacy PSNR and SSIM at every size."""
        for size in self.SIZES:
            full, legacy = room_sweep[size, 'full_path'], room_sweep[size, 'legacy']
            assert full.psnr_mean >= legacy.psnr_mean, size
            assert full.ssim_mean >= legacy.ssim_mean, size

    def test_twenty_samples_close_to_hundred(self, room_sweep):
        """Test that training on 20 samples stays within 3 dB PSNR of training on 100."""
        sparse, dense = room_sweep[20, 'full_path'], room_sweep[100, 'full_path']
        assert abs(dense.psnr_mean - sparse.psnr_mean) <= 3.0

    def test_top_beam_within_one_bin(self, room_sweep):
        """Test that at least 80% of held-out top-1 beams land within one bin of the truth."""
        assert room_sweep[100, 'full_path'].beam_hit_rate >= 0.8
