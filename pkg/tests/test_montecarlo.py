import json
import math

import numpy as np
import pytest

from saddle_lab.errors import InputError, ParameterError
from saddle_lab.fluct import LimitLaw
from saddle_lab.models import DiffusionModel, build_linear_toy, build_ok_corral
from saddle_lab.montecarlo import (EnsembleJob, FunctionalSpec, SampleSet, empirical_cdf,
                                   ks_crit95, ks_distance, ks_report_csv, law_for, mix64,
                                   run_ensemble, run_multi, summary_json)


def test_mix64_spreads_seeds():
    seeds = {mix64(0, N, i) for N in (10, 100) for i in range(1000)}
    assert len(seeds) == 2000
    assert all(0 <= s < 2 ** 64 for s in seeds)
    assert mix64(1, 10, 0) != mix64(0, 10, 0)
    assert mix64(5, 10, 3) == mix64(5, 10, 3)


def test_empirical_cdf():
    v = [1.0, 2.0, 3.0]
    assert empirical_cdf(v, 0.5) == 0.0
    assert empirical_cdf(v, 2.0) == pytest.approx(2 / 3)
    assert empirical_cdf(v, 10.0) == 1.0
    with pytest.raises(InputError):
        empirical_cdf([], 1.0)


def test_ks_on_quantile_grid():
    law = LimitLaw.survivors()
    M = 500
    x = law.quantile((np.arange(1, M + 1) - 0.5) / M)
    assert ks_distance(x, law) == pytest.approx(0.5 / M, rel=1e-9)


def test_ks_on_degenerate_sample():
    law = LimitLaw.survivors()
    x = np.full(50, 1.2)
    F = law.cdf(1.2)
    assert ks_distance(x, law) == pytest.approx(max(F, 1 - F))
    assert ks_distance(x, law) >= 1 - F


def test_ks_of_exact_draws():
    law = LimitLaw.min_dist(1.0, 1.0, 0.5, math.sqrt(0.5))
    x = law.sample(np.random.default_rng(2024), 4000)
    assert ks_distance(x, law) < 0.0339
    assert ks_crit95(4000) == pytest.approx(0.02147, abs=1e-5)
    with pytest.raises(InputError):
        ks_distance([], law)


def test_ks_accepts_plain_cdf():
    x = np.array([0.1, 0.4, 0.8])
    # uniform CDF: the largest gap is 2/3 - 0.4 just after the middle sample
    assert ks_distance(x, lambda v: np.clip(v, 0, 1)) == pytest.approx(2 / 3 - 0.4, abs=1e-12)


def test_job_validation():
    m = build_ok_corral()
    with pytest.raises(ParameterError):
        EnsembleJob(m, [100], 50, FunctionalSpec("survivors"))
    with pytest.raises(ParameterError):
        EnsembleJob(m, [1000, 100], 100, FunctionalSpec("survivors"))
    with pytest.raises(ParameterError):
        FunctionalSpec("hit_norm")
    with pytest.raises(ParameterError):
        FunctionalSpec("hit_norm", theta=0.0)
    with pytest.raises(ParameterError):
        FunctionalSpec("bogus")


@pytest.fixture(scope="module")
def small_okc():
    m = build_ok_corral()
    spec = FunctionalSpec("survivors")
    job = EnsembleJob(m, [100, 1000], 200, spec, base_seed=9, law=law_for(m, spec))
    return job, run_ensemble(job)


def test_ensemble_shape(small_okc):
    job, sets = small_okc
    assert [s.N for s in sets] == [100, 1000]
    for s in sets:
        assert s.M == 200 and len(s.values) == 200 and not s.failed
        assert np.all(np.diff(s.values) >= 0)
        assert s.seed_provenance["base_seed"] == 9
        # survivor counts are integers before rescaling
        counts = s.values * s.N ** 0.75
        assert np.allclose(counts, np.round(counts), atol=1e-9)
        assert s.ks_vs_law is not None


def test_ensemble_is_deterministic(small_okc):
    job, sets = small_okc
    again = run_ensemble(job)
    for a, b in zip(sets, again):
        assert np.array_equal(a.values, b.values)
        assert a.to_json() == b.to_json()


def test_prefix_property(small_okc):
    job, sets = small_okc
    small = EnsembleJob(job.model, [1000], 100, job.functional, base_seed=9, law=job.law)
    s100 = run_ensemble(small)[0]
    assert np.array_equal(s100.by_replica, sets[1].by_replica[:100])


def test_worker_count_does_not_matter(small_okc):
    job, sets = small_okc
    par = run_ensemble(job, workers=2)
    for a, b in zip(sets, par):
        assert np.array_equal(a.by_replica, b.by_replica)


def test_multi_functionals_share_replicas():
    m = build_linear_toy()
    fs = [FunctionalSpec("hit_norm", math.pi / 3), FunctionalSpec("hit_side", math.pi / 3),
          FunctionalSpec("min_dist"), FunctionalSpec("rescaled_Z")]
    out = run_multi(m, [1000], 100, fs, base_seed=4)
    assert set(out) == {"hit_norm", "hit_side", "min_dist", "rescaled_Z"}
    sides = out["hit_side"][0].values
    assert set(np.unique(sides)) <= {-1.0, 1.0}
    for k in out:
        assert not out[k][0].failed


def test_hit_time_matches_okcorral_duel():
    m = build_ok_corral()
    fs = [FunctionalSpec("hit_time", math.pi / 4), FunctionalSpec("survivors")]
    out = run_multi(m, [500], 100, fs, base_seed=1)
    assert out["hit_time"][0].n_failed == 0 and out["survivors"][0].n_failed == 0


def test_diffusion_ensemble():
    dm = DiffusionModel(build_linear_toy())
    spec = FunctionalSpec("min_dist")
    sets = run_multi(dm, [1000], 100, [spec], base_seed=3, dt=1e-3,
                     laws={"min_dist": law_for(dm, spec)})["min_dist"]
    assert sets[0].n_failed == 0 and sets[0].ks_vs_law < 0.3


def test_failure_flag():
    s = SampleSet(N=10, M=200, values=np.ones(197), seed_provenance={}, summary={}, n_failed=3)
    assert s.failed
    s = SampleSet(N=10, M=200, values=np.ones(198), seed_provenance={}, summary={}, n_failed=2)
    assert not s.failed


def test_laws_from_models():
    m = build_ok_corral()
    law = law_for(m, FunctionalSpec("hit_norm", math.pi / 4))
    assert law.c == pytest.approx(2 ** 0.75, rel=1e-9)
    assert law.sigma ** 2 == pytest.approx(1 / 3, abs=1e-9)
    toy = law_for(build_linear_toy(), FunctionalSpec("min_dist"))
    assert toy.sigma ** 2 == pytest.approx(0.5, abs=1e-9)
    with pytest.raises(ParameterError):
        law_for(m, FunctionalSpec("rescaled_Z"))


def test_reports(small_okc):
    _, sets = small_okc
    csv = ks_report_csv(sets).splitlines()
    assert csv[0] == "N,M,ks,crit95,pass" and len(csv) == 3
    data = json.loads(summary_json(sets))
    assert data[0]["N"] == 100 and "mean" in data[0]["summary"]
