"""Tests of grids, paths, samplers, ensembles, and serialization."""

import math

import numpy as np
import pytest

from wlab.errors import (GridError, ParameterError, ShapeError,
                         ValidationError)
from wlab.paths import (Path, PathEnsemble, ProcessParams, TimeGrid,
                        build_ensemble, read_ensemble_bin, read_ensemble_csv,
                        running_infimum, sample_bes_norm, sample_bes_sde,
                        sample_bm, sample_bm_drift, sample_tbt, stream_rng,
                        write_ensemble_bin, write_ensemble_csv)
from wlab.stats import ks_two_sample


class TestTimeGrid:
    def test_uniform_constructor(self):
        grid = TimeGrid.uniform(1.0, 0.25)
        np.testing.assert_allclose(grid.times, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert grid.kind == "uniform"
        assert grid.dt == 0.25
        assert grid.n == 5
        assert grid.horizon == 1.0

    def test_geometric_tail_spacing(self):
        grid = TimeGrid.geometric_tail(0.1, 1.0, 3.0, ratio=1.5)
        diffs = np.diff(grid.times)
        head = diffs[:10]
        np.testing.assert_allclose(head, 0.1)
        tail = diffs[10:]
        assert np.all(np.diff(tail[:-1]) > 0)
        assert grid.horizon == 3.0
        assert grid.kind == "geometric-tail"

    def test_explicit_kind(self):
        grid = TimeGrid.explicit([0.0, 0.1, 5.0])
        assert grid.kind == "explicit"
        with pytest.raises(GridError):
            grid.dt

    def test_validation(self):
        with pytest.raises(GridError):
            TimeGrid.explicit([1.0])
        with pytest.raises(GridError):
            TimeGrid.explicit([0.0, 0.5, 0.5])
        with pytest.raises(GridError):
            TimeGrid.explicit([-1.0, 0.5])
        with pytest.raises(GridError):
            TimeGrid.explicit([0.0, math.nan])
        with pytest.raises(GridError):
            TimeGrid(np.array([0.0, 0.1, 0.3]), "uniform")

    def test_index_of(self):
        grid = TimeGrid.uniform(1.0, 0.001)
        assert grid.index_of(0.5) == 500
        assert grid.times[grid.index_of(0.5)] == 0.5
        assert grid.index_of(0.5 + 1e-14) == 500
        with pytest.raises(GridError):
            grid.index_of(0.0005)

    def test_times_read_only(self):
        grid = TimeGrid.uniform(1.0, 0.5)
        with pytest.raises(ValueError):
            grid.times[0] = 3.0


class TestPathAndParams:
    def test_path_validation(self):
        grid = TimeGrid.uniform(1.0, 0.5)
        with pytest.raises(ShapeError):
            Path(grid, np.zeros(4))
        with pytest.raises(ValidationError):
            Path(grid, np.array([0.0, math.inf, 1.0]))

    def test_params_signature_and_validation(self):
        p = ProcessParams(x0=1.0, drift_a=-0.5, sigma=2.0, dim_n=3, r0=1.5)
        sig = p.signature()
        assert "x0=1" in sig and "n=3" in sig and "r0=1.5" in sig
        with pytest.raises(ParameterError):
            ProcessParams(sigma=-1.0)
        with pytest.raises(ParameterError):
            ProcessParams(dim_n=0)
        with pytest.raises(ParameterError):
            ProcessParams(r0=-2.0)

    def test_running_infimum(self):
        grid = TimeGrid.explicit([0.0, 1.0, 2.0, 3.0])
        inf = running_infimum(Path(grid, np.array([3.0, 1.0, 2.0, 0.5])))
        np.testing.assert_array_equal(inf.values, [3.0, 1.0, 1.0, 0.5])
        again = running_infimum(inf)
        np.testing.assert_array_equal(again.values, inf.values)


class TestStreamRng:
    def test_deterministic(self):
        a = stream_rng(7, 3).standard_normal(5)
        b = stream_rng(7, 3).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = stream_rng(7, 0).standard_normal(5)
        b = stream_rng(7, 1).standard_normal(5)
        assert not np.array_equal(a, b)

    def test_order_independent(self):
        late_first = stream_rng(7, 9).standard_normal(3)
        _ = stream_rng(7, 0).standard_normal(1000)
        late_again = stream_rng(7, 9).standard_normal(3)
        np.testing.assert_array_equal(late_first, late_again)

    def test_seed_bound(self):
        with pytest.raises(ParameterError):
            stream_rng(2 ** 64, 0)
        with pytest.raises(ParameterError):
            stream_rng(1, -1)


class TestSamplers:
    def test_bm_starts_at_x0(self):
        grid = TimeGrid.uniform(1.0, 0.25)
        path = sample_bm(grid, ProcessParams(x0=2.0), stream_rng(0, 0))
        assert path.values[0] == 2.0

    def test_tbt_is_time_scaled_bm_bitwise(self):
        grid = TimeGrid.explicit([0.0, 0.3, 1.0, 2.5])
        params = ProcessParams()
        bm = sample_bm(grid, params, stream_rng(5, 2))
        tbt = sample_tbt(grid, params, stream_rng(5, 2))
        np.testing.assert_array_equal(tbt.values, grid.times * bm.values)

    def test_bm_drift_line(self):
        grid = TimeGrid.uniform(2.0, 0.5)
        params = ProcessParams(x0=1.0, drift_a=3.0, sigma=2.0)
        bm = sample_bm(grid, ProcessParams(), stream_rng(9, 0))
        drifted = sample_bm_drift(grid, params, stream_rng(9, 0))
        np.testing.assert_allclose(
            drifted.values, 1.0 + 2.0 * bm.values + 3.0 * grid.times,
            rtol=0, atol=1e-15)

    def test_sde_matches_bm_in_dimension_one(self):
        grid = TimeGrid.uniform(1.0, 0.01)
        sde = sample_bes_sde(grid, ProcessParams(r0=5.0, dim_n=1),
                             stream_rng(3, 1))
        bm = sample_bm(grid, ProcessParams(x0=5.0), stream_rng(3, 1))
        np.testing.assert_array_equal(sde.values, bm.values)

    def test_sde_zero_noise_hand_values(self, stub_rng):
        grid = TimeGrid.uniform(1.0, 0.5)
        path = sample_bes_sde(grid, ProcessParams(r0=1.0, dim_n=3),
                              stub_rng(0.0))
        # dR = dt / R with the (3-1)/2 coefficient: 1 -> 1.5 -> 1.5 + 1/3
        assert path.values[0] == 1.0
        assert path.values[1] == 1.5
        assert path.values[2] == pytest.approx(1.5 + 0.5 / 1.5, abs=1e-15)

    def test_sde_floor_warns(self, stub_rng):
        grid = TimeGrid.uniform(1.0, 0.5)
        with pytest.warns(RuntimeWarning):
            path = sample_bes_sde(grid, ProcessParams(r0=1.0, dim_n=3),
                                  stub_rng(-50.0))
        assert np.all(path.values > 0)

    def test_sde_rejects_bad_inputs(self, stub_rng):
        with pytest.raises(ParameterError):
            sample_bes_sde(TimeGrid.uniform(1.0, 0.5),
                           ProcessParams(r0=0.0), stub_rng(0.0))
        with pytest.raises(GridError):
            sample_bes_sde(TimeGrid.explicit([0.0, 0.1, 0.5]),
                           ProcessParams(r0=1.0), stub_rng(0.0))

    def test_bes_norm_start_and_positivity(self):
        grid = TimeGrid.uniform(1.0, 0.1)
        path = sample_bes_norm(grid, ProcessParams(r0=1.0), stream_rng(2, 0))
        assert path.values[0] == 1.0
        assert np.all(path.values > 0)

    def test_bes_norm_second_moment(self):
        # E R_t^2 = r0^2 + n t; at r0=1, n=3, t=1 the target is 4
        grid = TimeGrid.explicit([0.0, 1.0])
        ens = build_ensemble("bes-norm", grid, ProcessParams(r0=1.0),
                             4000, 31)
        m = float(np.mean(ens.values_at(1.0) ** 2))
        assert abs(m - 4.0) < 0.25

    def test_scheme_agreement_at_marginals(self):
        # Euler scheme vs exact radial sampler, two-sample KS at two times
        grid = TimeGrid.uniform(0.2, 1e-3)
        params = ProcessParams(r0=1.0, dim_n=3)
        a = build_ensemble("bes-sde", grid, params, 1500, 17)
        b = build_ensemble("bes-norm", grid, params, 1500, 18)
        for t in (0.1, 0.2):
            res = ks_two_sample(a.values_at(t), b.values_at(t))
            assert res.p_value > 0.01


class TestEnsembles:
    def test_build_shapes_and_accessors(self):
        grid = TimeGrid.uniform(1.0, 0.5)
        ens = build_ensemble("bm", grid, ProcessParams(), 7, 0)
        assert ens.values.shape == (7, 3)
        assert ens.n_paths == 7
        assert ens.process_tag.startswith("bm[")
        np.testing.assert_array_equal(ens.values_at(0.5), ens.values[:, 1])
        assert isinstance(ens.path(3), Path)
        assert len(ens.paths) == 7

    def test_unknown_sampler(self):
        grid = TimeGrid.uniform(1.0, 0.5)
        with pytest.raises(ParameterError):
            build_ensemble("nope", grid, ProcessParams(), 3, 0)

    def test_callable_sampler(self):
        grid = TimeGrid.uniform(1.0, 0.5)

        def flat(grid, params, rng):
            return Path(grid, np.full(grid.n, 2.5))

        ens = build_ensemble(flat, grid, ProcessParams(), 4, 0)
        assert np.all(ens.values == 2.5)
        assert ens.process_tag.startswith("flat[")

    def test_regeneration_is_bit_exact(self):
        grid = TimeGrid.uniform(1.0, 0.1)
        a = build_ensemble("tbt", grid, ProcessParams(), 20, 123)
        b = build_ensemble("tbt", grid, ProcessParams(), 20, 123)
        np.testing.assert_array_equal(a.values, b.values)

    def test_ensemble_validation(self):
        grid = TimeGrid.uniform(1.0, 0.5)
        with pytest.raises(ShapeError):
            PathEnsemble(grid, np.zeros((2, 4)), 0, "t")
        with pytest.raises(ValidationError):
            PathEnsemble(grid, np.full((2, 3), math.nan), 0, "t")
        with pytest.raises(ParameterError):
            PathEnsemble(grid, np.zeros((2, 3)), 2 ** 64, "t")


class TestSerialization:
    def _ens(self):
        grid = TimeGrid.uniform(1.0, 0.25)
        return build_ensemble("bes-norm", grid, ProcessParams(r0=2.0), 5, 99)

    def test_csv_round_trip(self, tmp_path):
        ens = self._ens()
        f = str(tmp_path / "ens.csv")
        write_ensemble_csv(ens, f)
        back = read_ensemble_csv(f)
        np.testing.assert_array_equal(back.values, ens.values)
        np.testing.assert_array_equal(back.grid.times, ens.grid.times)
        assert back.master_seed == 99
        assert back.process_tag == ens.process_tag

    def test_binary_round_trip(self, tmp_path):
        ens = self._ens()
        f = str(tmp_path / "ens.bin")
        write_ensemble_bin(ens, f)
        back = read_ensemble_bin(f)
        np.testing.assert_array_equal(back.values, ens.values)
        np.testing.assert_array_equal(back.grid.times, ens.grid.times)
        assert back.grid.kind == ens.grid.kind

    def test_binary_rejects_garbage(self, tmp_path):
        f = tmp_path / "junk.bin"
        f.write_bytes(b"not a wlab file at all")
        with pytest.raises(ValidationError):
            read_ensemble_bin(str(f))

    def test_csv_rejects_garbage(self, tmp_path):
        f = tmp_path / "junk.csv"
        f.write_text("definitely,not,right\n1,2,3\n")
        with pytest.raises(ValidationError):
            read_ensemble_csv(str(f))
