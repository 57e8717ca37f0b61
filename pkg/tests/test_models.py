import numpy as np
import pytest

from framedyn.builtin import get_group
from framedyn.mlp import Mlp, MlpSpec
from framedyn.models import BaselineModel, SymmetryReducedModel
from framedyn.rng import Rng, derive_seed
from framedyn.sim import parking_step, reacher_step
from framedyn.training import build_baseline_model, build_symmetry_model
from conftest import HeadingRotationGroup


def _random_model(group, mode, layers=1, width=32, seed=0):
    return build_symmetry_model(group, [width] * layers, seed=seed, mode=mode)


@pytest.mark.parametrize("gid", ["se2car", "parking2", "reacher"])
@pytest.mark.parametrize("mode", ["delta", "absolute"])
def test_prediction_commutes_with_group_action(gid, mode):
    group = get_group(gid)
    model = _random_model(group, mode, seed=derive_seed(1, gid, mode))
    rng = Rng(10)
    x = group.random_state(rng, size=300)
    u = group.random_control(rng, size=300)
    g = group.random_element(rng, size=300)
    lhs = model.predict(group.act_state(g, x), group.act_control(g, u))
    rhs = group.act_state(g, model.predict(x, u))
    assert np.max(np.abs(lhs - rhs)) < 1e-8


def test_prediction_commutes_for_rotation_only_group():
    group = HeadingRotationGroup()
    for mode in ("delta", "absolute"):
        model = _random_model(group, mode)
        rng = Rng(11)
        x = group.random_state(rng, size=200)
        u = group.random_control(rng, size=200)
        g = group.random_element(rng, size=200)
        lhs = model.predict(group.act_state(g, x), group.act_control(g, u))
        rhs = group.act_state(g, model.predict(x, u))
        assert np.max(np.abs(lhs - rhs)) < 1e-8


@pytest.mark.parametrize("gid", ["se2car", "parking2", "reacher"])
def test_reconstruction_regressor_gives_identity_dynamics(gid):
    # With the regressor returning the cross-section state of its reduced
    # input, the assembled absolute-mode model is the identity map.
    group = get_group(gid)
    model = SymmetryReducedModel(
        group,
        lambda z: group.reconstruct_on_cross_section(z[..., : group.b_dim]),
        mode="absolute",
    )
    rng = Rng(12)
    x = group.random_state(rng, size=200)
    u = group.random_control(rng, size=200)
    assert np.max(np.abs(model.predict(x, u) - x)) < 1e-9


@pytest.mark.parametrize("gid", ["se2car", "parking2", "reacher"])
def test_zero_delta_regressor_predicts_no_change(gid):
    group = get_group(gid)
    model = SymmetryReducedModel(
        group, lambda z: np.zeros(z.shape[:-1] + (group.n,)), mode="delta"
    )
    rng = Rng(13)
    x = group.random_state(rng, size=100)
    u = group.random_control(rng, size=100)
    assert np.max(np.abs(model.predict(x, u) - x)) < 1e-9


@pytest.mark.parametrize(
    "env_step,gid",
    [(parking_step, "parking2"), (reacher_step, "reacher")],
)
def test_exact_regressor_reproduces_simulator(env_step, gid):
    # Feeding the true dynamics through the cross-section as the regressor
    # must reproduce the simulator everywhere the frame is defined.
    group = get_group(gid)

    def true_reduced_map(z):
        xb, u = z[..., : group.b_dim], z[..., group.b_dim :]
        return env_step(group.reconstruct_on_cross_section(xb), u)

    model = SymmetryReducedModel(group, true_reduced_map, mode="absolute")
    rng = Rng(14)
    x = group.random_state(rng, size=200)
    u = group.random_control(rng, size=200)
    assert np.max(np.abs(model.predict(x, u) - env_step(x, u))) < 1e-9


def test_training_target_on_cross_section_is_plain_pair(parking_group):
    group = get_group("se2car")
    x = np.array([0.0, 0.0, 0.8, -0.3, 1.0, 0.0])  # on the cross-section
    u = np.array([0.5, -0.1])
    x_next = np.array([0.08, -0.03, 0.85, -0.25, 0.995, 0.1])
    model = SymmetryReducedModel(group, lambda z: z, mode="absolute")
    sample = model.training_target(x, u, x_next)
    assert np.allclose(sample.inputs, [0.8, -0.3, 0.5, -0.1], atol=1e-15)
    assert np.max(np.abs(sample.targets - x_next)) < 1e-12


def test_training_target_shapes(parking_group, reacher_group,
                                small_parking_dataset, small_reacher_dataset):
    for group, ds, d_in, d_out in [
        (parking_group, small_parking_dataset, 8, 24),
        (reacher_group, small_reacher_dataset, 8, 11),
    ]:
        model = _random_model(group, "delta")
        sample = model.training_target(ds.x, ds.u, ds.x_next)
        assert sample.inputs.shape == (len(ds), d_in)
        assert sample.targets.shape == (len(ds), d_out)


def test_reduced_sample_is_frame_independent(parking_group, small_parking_dataset):
    ds = small_parking_dataset
    rng = Rng(15)
    g = parking_group.random_element(rng, size=len(ds))
    for mode in ("delta", "absolute"):
        model = _random_model(parking_group, mode)
        orig = model.training_target(ds.x, ds.u, ds.x_next)
        moved = model.training_target(
            parking_group.act_state(g, ds.x),
            parking_group.act_control(g, ds.u),
            parking_group.act_state(g, ds.x_next),
        )
        assert np.max(np.abs(orig.inputs - moved.inputs)) < 1e-9
        assert np.max(np.abs(orig.targets - moved.targets)) < 1e-9
        # so the regression loss of any regressor matches on both
        pred_o = model.regressor(orig.inputs)
        pred_m = model.regressor(moved.inputs)
        loss_o = np.mean((pred_o - orig.targets) ** 2)
        loss_m = np.mean((pred_m - moved.targets) ** 2)
        assert abs(loss_o - loss_m) < 1e-9


def test_baseline_dimensions():
    parking = build_baseline_model(24, 4, [16])
    assert parking.input_dim == 28 and parking.output_dim == 24
    reacher = build_baseline_model(11, 2, [16])
    assert reacher.input_dim == 13 and reacher.output_dim == 11


def test_baseline_zero_delta_predicts_no_change():
    model = BaselineModel(4, 2, lambda z: np.zeros(z.shape[:-1] + (4,)), mode="delta")
    x = Rng(16).uniform(-1, 1, size=(20, 4))
    u = Rng(17).uniform(-1, 1, size=(20, 2))
    assert np.array_equal(model.predict(x, u), x)


def test_symmetry_model_arity_validation():
    group = get_group("parking2")
    wrong = Mlp.from_spec(MlpSpec(input_dim=7, output_dim=24, hidden_layers=(8,)))
    with pytest.raises(ValueError, match="input arity"):
        SymmetryReducedModel(group, wrong)
    wrong_out = Mlp.from_spec(MlpSpec(input_dim=8, output_dim=23, hidden_layers=(8,)))
    with pytest.raises(ValueError, match="output arity"):
        SymmetryReducedModel(group, wrong_out)
    with pytest.raises(ValueError, match="mode"):
        SymmetryReducedModel(group, lambda z: z, mode="relative")


def test_baseline_arity_validation():
    with pytest.raises(ValueError, match="input arity"):
        BaselineModel(4, 2, Mlp.from_spec(MlpSpec(input_dim=5, output_dim=4)))
    model = build_baseline_model(4, 2, [8])
    with pytest.raises(ValueError, match="state"):
        model.predict(np.zeros(3), np.zeros(2))
    with pytest.raises(ValueError, match="control"):
        model.predict(np.zeros(4), np.zeros(3))


class TestHomomorphismShortcut:
    def test_matches_general_path_for_linear_action(self):
        group = HeadingRotationGroup()
        model = _random_model(group, "delta", seed=21)
        rng = Rng(18)
        x = group.random_state(rng, size=300)
        u = group.random_control(rng, size=300)
        fast = model.predict_via_homomorphism(x, u)
        general = model.predict(x, u)
        assert np.max(np.abs(fast - general)) < 1e-12

    def test_zero_regressor_fast_path_is_identity(self):
        group = HeadingRotationGroup()
        model = SymmetryReducedModel(
            group, lambda z: np.zeros(z.shape[:-1] + (group.n,)), mode="delta"
        )
        x = group.random_state(Rng(19), size=50)
        u = group.random_control(Rng(20), size=50)
        assert np.max(np.abs(model.predict_via_homomorphism(x, u) - x)) < 1e-15

    def test_translation_group_must_not_use_shortcut(self):
        # The would-be shortcut value demonstrably differs once the action
        # has a translation part, which is why the capability defaults off.
        group = get_group("se2car")
        model = _random_model(group, "delta", seed=22)
        rng = Rng(21)
        x = group.random_state(rng, size=100)
        u = group.random_control(rng, size=100)
        frame = group.moving_frame(x)
        out = model.regressor(model.reduced_inputs(x, u))
        would_be_fast = x + group.act_state(group.inverse(frame), out)
        general = model.predict(x, u)
        assert np.max(np.abs(would_be_fast - general)) > 1e-6
        with pytest.raises(ValueError, match="not flagged additive"):
            model.predict_via_homomorphism(x, u)

    def test_shortcut_requires_delta_mode(self):
        group = HeadingRotationGroup()
        model = _random_model(group, "absolute", seed=23)
        with pytest.raises(ValueError, match="delta"):
            model.predict_via_homomorphism(group.random_state(Rng(2)),
                                           group.random_control(Rng(3)))
