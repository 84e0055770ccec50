import json
import pytest
from libinquire.config import RunConfig
from libinquire.exceptions import ConfigError


def test_defaults_are_valid():
    config = RunConfig().validate()
    assert config.reward_weights == (0.2, 0.7, 0.1)
    assert config.max_rounds == 10
    assert config.mr_gamma == 0.7


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigError, match="learning_rate"):
        RunConfig.from_dict({"learning_rate": 0.1})


def test_file_then_flags(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"gamma": 0.5, "seed": 7, "compress_units": [16, 8]}))
    config = RunConfig.from_file(str(path))
    assert (config.gamma, config.seed, config.compress_units) == (0.5, 7, (16, 8))
    merged = config.with_overrides(gamma=0.8, seed=None)
    assert (merged.gamma, merged.seed) == (0.8, 7)


@pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
def test_bad_config_file(tmp_path, content):
    path = tmp_path / "config.json"
    path.write_text(content)
    with pytest.raises(ConfigError):
        RunConfig.from_file(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        RunConfig.from_file(str(tmp_path / "absent.json"))


@pytest.mark.parametrize("changes", [
    {"gamma": 2.0}, {"tau": -0.1}, {"alpha": -1.0}, {"reward_weights": (0.5, 0.5)},
    {"ablate": "clarity"}, {"batch_size": 0}, {"test_size": 1.0}, {"optimizer": "rmsprop"},
    {"compress_units": ()}, {"sweep": (0, 5)}, {"coverage_mode": "exact"},
    {"reward_weight_decay": -0.1},
])
def test_out_of_range_values(changes):
    with pytest.raises(ConfigError):
        RunConfig().with_overrides(**changes)


def test_config_hash_ignores_output_location():
    base = RunConfig()
    assert base.config_hash() == base.replace(out="elsewhere", verbose=2).config_hash()
    assert base.config_hash() != base.replace(seed=1).config_hash()
    assert len(base.config_hash()) == 64


def test_ablation_zeroes_one_weight():
    assert RunConfig(ablate="novelty").effective_weights() == (0.2, 0.0, 0.1)
    assert RunConfig().effective_weights() == (0.2, 0.7, 0.1)
