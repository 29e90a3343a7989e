"""Filtered backprojection baseline and the unfiltered adjoint."""

import numpy as np
import pytest

from cwds.fbp import FilterSpec, fbp_reconstruct, plain_backprojection, ramp_kernel
from cwds.geometry import (
    ImageGrid,
    assemble_system_matrix,
    back_project,
    build_rays,
    trace_ray,
)
from cwds.io import relative_error
from cwds.phantom import SHEPP_LOGAN, shepp_logan, simulate_sinogram
from cwds.rng import random_uniform

from test_geometry import small_geometry


class TestFilterSpec:
    def test_default_keeps_full_band(self):
        assert FilterSpec().cutoff == 1.0

    def test_cutoff_range_enforced(self):
        with pytest.raises(ValueError):
            FilterSpec(cutoff=0.0)
        with pytest.raises(ValueError):
            FilterSpec(cutoff=1.2)


class TestRampKernel:
    def test_zero_lag_tap(self):
        kernel = ramp_kernel(16, 0.5)
        assert kernel[0] == pytest.approx(1.0 / (4.0 * 0.25))

    def test_odd_lags(self):
        s = 0.25
        kernel = ramp_kernel(16, s)
        for lag in (1, 3, 5):
            expected = -1.0 / (np.pi**2 * lag**2 * s**2)
            assert kernel[lag] == pytest.approx(expected)
            # Wrapped negative lag mirrors the positive one.
            assert kernel[16 - lag] == pytest.approx(expected)

    def test_even_lags_vanish(self):
        kernel = ramp_kernel(16, 0.5)
        assert kernel[2] == kernel[4] == kernel[6] == 0.0

    def test_dc_gain_is_small(self):
        # The infinite kernel sums to zero; truncation leaves a tail of order
        # 1 / length.
        s = 0.1
        length = 512
        kernel = ramp_kernel(length, s)
        assert abs(kernel.sum()) * 4.0 * s**2 < 8.0 / length

    def test_validation(self):
        with pytest.raises(ValueError):
            ramp_kernel(1, 0.5)
        with pytest.raises(ValueError):
            ramp_kernel(16, 0.0)


class TestFbpReconstruct:
    def test_zero_sinogram_gives_zero_image(self):
        grid = ImageGrid(n=16, fov=2.0)
        geom = small_geometry()
        out = fbp_reconstruct(np.zeros(geom.num_rays), geom, grid)
        assert not out.any()

    def test_linear_in_the_data(self):
        grid = ImageGrid(n=16, fov=2.0)
        geom = small_geometry()
        m1 = random_uniform(geom.num_rays, seed=51)
        m2 = random_uniform(geom.num_rays, seed=52)
        lhs = fbp_reconstruct(m1 + m2, geom, grid)
        rhs = fbp_reconstruct(m1, geom, grid) + fbp_reconstruct(m2, geom, grid)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)

    def test_dimension_mismatch(self):
        geom = small_geometry()
        with pytest.raises(ValueError):
            fbp_reconstruct(np.zeros(geom.num_rays + 1), geom, ImageGrid(n=16))

    def test_recovers_phantom_roughly(self):
        n = 64
        grid = ImageGrid(n=n, fov=2.0)
        geom = small_geometry(num_angles=180, num_detectors=n)
        m = simulate_sinogram(SHEPP_LOGAN, geom, grid)
        recon = fbp_reconstruct(m, geom, grid)
        # Coarse-grid smoke bound; the full-scale run comes in well under it.
        assert relative_error(recon, grid.as_vector(shepp_logan(n))) < 0.35

    def test_more_views_reduce_error(self):
        n = 64
        grid = ImageGrid(n=n, fov=2.0)
        truth = grid.as_vector(shepp_logan(n))
        errors = {}
        for views in (30, 120):
            geom = small_geometry(num_angles=views, num_detectors=n)
            m = simulate_sinogram(SHEPP_LOGAN, geom, grid)
            errors[views] = relative_error(fbp_reconstruct(m, geom, grid), truth)
        assert errors[120] < errors[30]

    def test_cutoff_damps_high_frequencies(self):
        # A low cutoff smooths the image: the result has smaller total
        # variation than the full-band reconstruction.
        n = 64
        grid = ImageGrid(n=n, fov=2.0)
        geom = small_geometry(num_angles=60, num_detectors=n)
        m = simulate_sinogram(SHEPP_LOGAN, geom, grid)
        full = grid.as_image(fbp_reconstruct(m, geom, grid, FilterSpec(cutoff=1.0)))
        soft = grid.as_image(fbp_reconstruct(m, geom, grid, FilterSpec(cutoff=0.3)))

        def total_variation(img):
            return np.abs(np.diff(img, axis=0)).sum() + np.abs(np.diff(img, axis=1)).sum()

        assert total_variation(soft) < total_variation(full)

    def test_output_may_be_negative(self):
        # No constraint is applied; ringing below zero is expected.
        n = 32
        grid = ImageGrid(n=n, fov=2.0)
        geom = small_geometry(num_angles=60, num_detectors=n)
        m = simulate_sinogram(SHEPP_LOGAN, geom, grid)
        assert fbp_reconstruct(m, geom, grid).min() < 0.0


class TestFullScaleFbp:
    def test_error_above_acceptance_floor_120(self, fbp_full_120):
        assert fbp_full_120["error"] >= 0.10

    def test_error_above_acceptance_floor_30(self, fbp_full_30):
        assert fbp_full_30["error"] >= 0.10

    def test_sparser_views_hurt(self, fbp_full_120, fbp_full_30):
        assert fbp_full_120["error"] < fbp_full_30["error"]


class TestPlainBackprojection:
    def test_zero_data(self):
        system = assemble_system_matrix(small_geometry(), ImageGrid(n=8))
        assert not plain_backprojection(np.zeros(system.rows), system).any()

    def test_delegates_exactly(self):
        system = assemble_system_matrix(small_geometry(), ImageGrid(n=8))
        m = random_uniform(system.rows, seed=53)
        np.testing.assert_array_equal(
            plain_backprojection(m, system), back_project(system, m)
        )

    def test_single_ray_streak(self):
        grid = ImageGrid(n=8, fov=2.0)
        geom = small_geometry(num_angles=4, num_detectors=6)
        system = assemble_system_matrix(geom, grid)
        m = np.zeros(system.rows)
        m[9] = 2.0
        streak = plain_backprojection(m, system)
        idx, _ = trace_ray(build_rays(geom)[9], grid)
        assert sorted(np.flatnonzero(streak).tolist()) == sorted(idx.tolist())
