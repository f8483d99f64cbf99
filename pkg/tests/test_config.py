from __future__ import annotations

import json

import pytest

from heleshaw.exceptions import InvalidConfig
from heleshaw.models import ICTerm, RunConfig, SweepConfig, parse_config
from heleshaw.models.params import Discretization, StepperConfig


def test_defaults():
    config = RunConfig()
    assert config.dt == pytest.approx(0.01)
    assert config.discretization.M == 256
    assert config.scheme == "if_rk4"
    assert config.tolerances.gamma_tol == 1e-12


def test_time_step_follows_surface_tension():
    assert RunConfig(sigma=4.0).dt == pytest.approx(0.0025)
    assert RunConfig(sigma=4.0, dt=0.1).dt == 0.1


def test_grid_constraints():
    with pytest.raises(ValueError, match="even"):
        RunConfig(n=8, M=33)
    with pytest.raises(ValueError, match="at least 4n"):
        RunConfig(n=32, M=64)
    assert Discretization(n=16).M == 128
    assert RunConfig(n=16).M == 128
    assert RunConfig(n=64).M == 256
    assert "M" not in RunConfig(n=16).__fields_set__
    assert Discretization(n=64).M == 256


def test_ic_term_forms():
    assert ICTerm.validate([3, 0.1]).as_tuple() == (3, 0.1, 0.0)
    assert ICTerm.validate({"k": -4, "cos_amp": 0.1, "sin_amp": 0.2}).as_tuple() == (4, 0.1, -0.2)


@pytest.mark.parametrize("k", [0, 1, -1])
def test_low_modes_are_rejected(k):
    with pytest.raises(InvalidConfig, match="Q1"):
        parse_config(json.dumps({"ic": [[k, 0.1, 0.0]]}))


def test_modes_beyond_truncation_are_rejected():
    with pytest.raises(InvalidConfig, match="exceeds the truncation"):
        parse_config('{"n": 8, "ic": [[9, 0.01, 0.0]]}')


def test_unknown_keys_are_rejected():
    with pytest.raises(InvalidConfig) as excinfo:
        parse_config('{"n": 16, "viscosity": 2}')
    assert any("viscosity" in message for message in excinfo.value.errors)


def test_every_violation_is_reported():
    with pytest.raises(InvalidConfig) as excinfo:
        parse_config('{"sigma": -1, "amu": 2, "t_final": -3}')
    assert len(excinfo.value.errors) == 3


def test_parse_from_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text('{"n": 16, "ic": [{"k": 2, "cos_amp": 0.05}]}', encoding="utf-8")
    config = parse_config(path)
    assert isinstance(config, RunConfig)
    assert config.ic_terms() == [(2, 0.05, 0.0)]


def test_parse_errors():
    with pytest.raises(InvalidConfig, match="does not exist"):
        parse_config("missing.json")
    with pytest.raises(InvalidConfig, match="not valid JSON"):
        parse_config("{nope")
    with pytest.raises(InvalidConfig, match="JSON object"):
        parse_config("[1, 2]")


def test_random_initial_condition_is_seeded():
    config = RunConfig(n=32, ic_mode="random", seed=5)
    terms = config.ic_terms()
    assert [k for k, _, _ in terms] == list(range(2, 9))
    assert terms == RunConfig(n=32, ic_mode="random", seed=5).ic_terms()
    assert terms != RunConfig(n=32, ic_mode="random", seed=6).ic_terms()
    for k, cos_amp, sin_amp in terms:
        envelope = config.random_amplitude * k ** -(config.r + 1)
        assert abs(cos_amp) <= envelope and abs(sin_amp) <= envelope


def test_initial_state_is_projected():
    config = RunConfig(n=16, ic=[[2, 0.05, 0.0], [5, 0.0, 0.01]])
    state = config.initial_state()
    assert state.M == 128
    assert abs(state.theta_tilde.coeffs[2] - 0.025) < 1e-15


def test_stepper_view():
    config = RunConfig(dt=0.02, t_final=0.1, record_every=2)
    assert config.stepper == StepperConfig(dt=0.02, t_final=0.1, record_every=2)
    assert config.stepper.n_steps == 5


def test_sweep_cross_product():
    sweep = parse_config(
        json.dumps(
            {
                "base": {"n": 16, "sigma": 1.0, "ic": [[2, 0.05, 0.0]]},
                "axes": {"amu": [-0.5, 0.5], "sigma": [1.0, 2.0, 4.0]},
            }
        )
    )
    assert isinstance(sweep, SweepConfig)
    assert sweep.size == 6
    children = sweep.children()
    assert [point for point, _ in children][0] == {"sigma": 1.0, "amu": -0.5}
    assert {child.dt for _, child in children} == {0.01, 0.005, 0.0025}


def test_sweep_rederives_grid_for_each_n():
    sweep = SweepConfig(base=RunConfig(sigma=2.0), axes={"n": [16, 32]})
    grids = [child.discretization.M for _, child in sweep.children()]
    assert grids == [128, 128]
    assert [child.n for _, child in sweep.children()] == [16, 32]


def test_sweep_scales_initial_amplitudes():
    base = RunConfig(n=16, ic=[[2, 0.04, 0.02]])
    sweep = SweepConfig(base=base, axes={"ic_scale": [0.5, 2.0]})
    amplitudes = [child.ic_terms()[0] for _, child in sweep.children()]
    assert amplitudes == [(2, 0.02, 0.01), (2, 0.08, 0.04)]


def test_sweep_rejects_bad_axes():
    with pytest.raises(InvalidConfig, match="unknown sweep axes"):
        parse_config('{"base": {}, "axes": {"dt": [0.1]}}')
    with pytest.raises(InvalidConfig, match="at most"):
        parse_config(json.dumps({"base": {}, "axes": {"sigma": [1.0] * 101, "amu": [0.0] * 100}}))


def test_sweep_reports_invalid_children():
    sweep = SweepConfig(base=RunConfig(n=16, M=64), axes={"n": [16, 32]})
    with pytest.raises(InvalidConfig, match="at least 4n"):
        sweep.children()
