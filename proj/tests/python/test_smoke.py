import math

import numpy as np
import pytest

import scenenoise as sn

BALCONY = (
    "dimensions: (4, 2.5, 4)\n"
    "scene: balcony\n"
    "microphone: (3.5, 0.5, 1.2)\n"
    "speaker: (2, 1.5, 1.6)\n"
    "noise: type=the sound of footsteps location=(0.5, 0.5, 1.2)\n"
    "noise: type=wind blowing location=(1, 2, 3)\n"
)


def test_parse_and_validate():
    scene = sn.parse_scene_info(BALCONY)
    assert scene["dimensions"] == [4, 2.5, 4]
    assert len(scene["noises"]) == 2
    assert sn.validate(BALCONY)["passed"]
    assert sn.validate("just prose")["response_error"]
    with pytest.raises(sn.ParseError):
        sn.parse_scene_info("")


def test_render_round_trip():
    scene = sn.parse_scene_info(BALCONY)
    assert sn.parse_scene_info(sn.render_scene(scene))["noises"] == scene["noises"]


def test_image_sources_and_rir():
    images = sn.image_sources([4, 2.5, 4], [2, 1.5, 1.6], [3.5, 0.5, 1.2], 0.2)
    assert len(images) == 7
    rir = sn.compute_rir([20, 20, 20], [13.43, 10, 10], [10, 10, 10], 0.3, max_order=0)
    assert abs(rir[160] - 1 / (4 * math.pi * 3.43)) < 1e-6
    assert sn.absorption_from_rt60(0.5, [4, 2.5, 4]) == pytest.approx(0.1790, abs=1e-4)


def test_convolve_matches_numpy():
    rng = np.random.default_rng(0)
    x, h = rng.standard_normal(500), rng.standard_normal(300)
    assert np.max(np.abs(sn.convolve(x, h) - np.convolve(x, h))) < 1e-9


def test_simulate_scene_and_noise():
    speech = np.sin(np.arange(4000) * 0.05) * 0.3
    noises = [sn.fixture_noise("the sound of footsteps", 1, 0.5), sn.fixture_noise("wind blowing", 1, 0.5)]
    audio, raw, gain = sn.simulate_scene(BALCONY, speech, noises, seed=3)
    assert audio.shape == speech.shape
    assert np.allclose(audio, raw * gain)


def test_anr_extremes():
    assert not any(sn.should_augment(i, 0.0, 1) for i in range(200))
    assert all(sn.should_augment(i, 1.0, 1) for i in range(200))


def test_cli_entry():
    if not hasattr(sn, "run_cli"):
        pytest.skip("built without the CLI")
    code, out, _ = sn.run_cli(["prompt-build", "--task", "Noisy balcony"])
    assert code == 0
    assert out == sn.build_prompt("Noisy balcony")
    assert sn.run_cli([])[0] == 2
