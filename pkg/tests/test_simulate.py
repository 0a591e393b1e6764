import numpy as np
import pytest

from cel0loc import (Emitter, EmitterList, Image, ImageGrid, PsfModel,
                     TrainingSetConfig, ValidationError, gen_training_set,
                     make_scenario, render_emitters_to_hr, simulate_frame,
                     snr_db)
from cel0loc.simulate import (SCENARIO_INTENSITY, TEST_FWHM_NM,
                              gen_filament_frames)


class TestRendering:
    def test_single_emitter_lands_in_containing_pixel(self):
        grid = ImageGrid(8, 8, 10.0)
        img = render_emitters_to_hr(
            EmitterList(1, (Emitter(37.0, 12.0, 5.0),)), grid)
        assert img.values[1, 3] == 5.0
        assert img.values.sum() == 5.0

    def test_coincident_emitters_accumulate(self):
        grid = ImageGrid(4, 4, 10.0)
        ems = EmitterList(1, (Emitter(15.0, 15.0, 2.0),
                              Emitter(12.0, 18.0, 3.0)))
        img = render_emitters_to_hr(ems, grid)
        assert img.values[1, 1] == 5.0

    def test_boundary_pixels(self):
        grid = ImageGrid(4, 4, 10.0)
        img = render_emitters_to_hr(
            EmitterList(1, (Emitter(0.0, 0.0, 1.0),
                            Emitter(39.999, 39.999, 1.0))), grid)
        assert img.values[0, 0] == 1.0
        assert img.values[3, 3] == 1.0

    def test_out_of_fov_names_offender(self):
        grid = ImageGrid(4, 4, 10.0)
        ems = EmitterList(1, (Emitter(5.0, 5.0, 1.0),
                              Emitter(40.0, 5.0, 1.0)))
        with pytest.raises(ValidationError, match="emitter 1"):
            render_emitters_to_hr(ems, grid)

    def test_negative_intensity_rejected(self):
        with pytest.raises(ValidationError):
            Emitter(1.0, 1.0, -2.0)


class TestScenarios:
    def test_grid_geometry(self):
        for name in ("Test1a", "Test2a", "Test3a"):
            spec = make_scenario(name)
            assert spec.fov == ImageGrid(512, 512, 25.0)
            assert spec.magnification == 4
            assert spec.psf.fwhm == pytest.approx(TEST_FWHM_NM)

    def test_pair_separations(self):
        near = make_scenario("Test1a").emitters.emitters
        far = make_scenario("Test2a").emitters.emitters
        def sep(pair):
            return np.hypot(pair[0].x - pair[1].x, pair[0].y - pair[1].y)
        assert sep(near) == pytest.approx(25.0)
        assert sep(far) == pytest.approx(75.0)
        # both pairs sit on one column, centered in the FOV
        for pair in (near, far):
            assert pair[0].x == pair[1].x == pytest.approx(255.5 * 25.0)

    def test_circle_scenario(self):
        spec = make_scenario("Test3a")
        center = 255.5 * 25.0
        for em in spec.emitters.emitters:
            r = np.hypot(em.x - center, em.y - center)
            assert r == pytest.approx(125.0)
        assert len(spec.emitters) == 4

    def test_unknown_name_rejected(self):
        with pytest.raises(ValidationError):
            make_scenario("Test9z")

    def test_frame_snr_and_determinism(self):
        spec = make_scenario("Test2a", snr_db=15.0)
        lr1, hr1 = simulate_frame(spec, seed=7)
        lr2, hr2 = simulate_frame(spec, seed=7)
        np.testing.assert_array_equal(lr1.values, lr2.values)
        np.testing.assert_array_equal(hr1.values, hr2.values)
        assert lr1.grid == ImageGrid(128, 128, 100.0)
        # the realized SNR of the simulated frame is exact by construction
        from cel0loc import ForwardOperator
        op = ForwardOperator(spec.fov, spec.magnification, spec.psf)
        clean_lr = op.apply(hr1)
        assert snr_db(clean_lr, lr1) == pytest.approx(15.0, abs=1e-9)

    def test_hr_truth_places_intensity(self):
        spec = make_scenario("Test2a")
        _, hr = simulate_frame(spec, seed=0)
        assert hr.values[254, 255] == SCENARIO_INTENSITY
        assert hr.values[257, 255] == SCENARIO_INTENSITY
        assert hr.values.sum() == 2 * SCENARIO_INTENSITY


class TestFilamentFrames:
    def test_shapes_and_determinism(self):
        fov = ImageGrid(128, 128, 25.0)
        a = gen_filament_frames(5, fov, seed=11)
        b = gen_filament_frames(5, fov, seed=11)
        assert len(a) == 5
        assert [f.frame_id for f in a] == [1, 2, 3, 4, 5]
        for fa, fb in zip(a, b):
            assert fa == fb
        for frame in a:
            assert len(frame) == 15
            for em in frame.emitters:
                assert 0 <= em.x < fov.width_nm
                assert 0 <= em.y < fov.height_nm

    def test_different_seeds_differ(self):
        fov = ImageGrid(128, 128, 25.0)
        assert gen_filament_frames(2, fov, seed=1) != \
            gen_filament_frames(2, fov, seed=2)

    def test_bad_counts_rejected(self):
        with pytest.raises(ValidationError):
            gen_filament_frames(0, ImageGrid(64, 64, 25.0))


class TestTrainingSet:
    CFG = dict(n_images=2, k_patches=3, patch=16,
               fov=ImageGrid(32, 32, 100.0), seed=5)

    def test_pair_shapes(self):
        pairs = gen_training_set(TrainingSetConfig(**self.CFG))
        assert len(pairs) == 3
        for p in pairs:
            assert p.input.grid == ImageGrid(64, 64, 25.0)
            assert p.target.grid == ImageGrid(64, 64, 25.0)

    def test_deterministic(self):
        a = gen_training_set(TrainingSetConfig(**self.CFG))
        b = gen_training_set(TrainingSetConfig(**self.CFG))
        for pa, pb in zip(a, b):
            np.testing.assert_array_equal(pa.input.values, pb.input.values)
            np.testing.assert_array_equal(pa.target.values, pb.target.values)

    def test_input_is_block_constant(self):
        # nearest-neighbour upsampled LR patches are constant on 4x4 blocks
        pairs = gen_training_set(TrainingSetConfig(**self.CFG))
        v = pairs[0].input.values
        blocks = v.reshape(16, 4, 16, 4)
        np.testing.assert_array_equal(
            blocks, np.broadcast_to(blocks[:, :1, :, :1], blocks.shape))

    def test_density_zero_means_empty_targets(self):
        cfg = TrainingSetConfig(density=0.0, **self.CFG)
        pairs = gen_training_set(cfg)
        for p in pairs:
            assert np.all(p.target.values == 0)

    def test_fixed_count_respected(self):
        # when the patch covers the whole FOV, every target carries all the
        # configured emitters (a few may share a pixel)
        full = dict(self.CFG, patch=32)
        pairs = gen_training_set(TrainingSetConfig(fixed_count=7, **full))
        for p in pairs:
            assert np.count_nonzero(p.target.values) <= 7  # collisions allowed
            assert np.count_nonzero(p.target.values) >= 1

    def test_expected_count_matches_density(self):
        # 6 emitters/um^2 on a 6.4 x 6.4 um FOV -> mean 245.76 per image
        cfg = TrainingSetConfig(density=6.0,
                                fov=ImageGrid(64, 64, 100.0),
                                n_images=40, k_patches=1, seed=2)
        from cel0loc.simulate import _draw_emitters
        counts = [len(_draw_emitters(cfg, i)) for i in range(40)]
        assert np.mean(counts) == pytest.approx(245.76, rel=0.1)

    def test_patch_exceeding_fov_rejected(self):
        with pytest.raises(ValidationError):
            TrainingSetConfig(patch=33, fov=ImageGrid(32, 32, 100.0))

    def test_negative_density_rejected(self):
        with pytest.raises(ValidationError):
            TrainingSetConfig(density=-1.0)
