"""Tests for settings, profiles and experiment configuration validation"""

import json

import pytest

from sdyna.utils.config import ConfigManager, ExperimentConfig, UserSettings
from sdyna.utils.errors import ValidationError


@pytest.fixture
def manager(tmp_path):
    return ConfigManager(tmp_path / 'sdyna')


class TestExperimentConfig:
    def test_defaults_are_valid(self):
        config = ExperimentConfig()
        config.validate()
        assert config.tau == 7.88
        assert config.taus[-1] == 10.8

    def test_every_violation_reported(self):
        config = ExperimentConfig(runs=0, agent='qlearner', gamma=1.0, metrics=['speed'])
        with pytest.raises(ValidationError) as info:
            config.validate()
        assert len(info.value.violations) == 4

    def test_from_dict_ignores_unknown_keys(self):
        config = ExperimentConfig.from_dict({'steps': 10, 'colour': 'red'})
        assert config.steps == 10

    def test_sweep_needs_taus(self):
        with pytest.raises(ValidationError, match='tau'):
            ExperimentConfig(mode='tau-sweep', taus=[]).validate()


class TestConfigManager:
    def test_environment_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv('SDYNA_CONFIG_DIR', str(tmp_path / 'elsewhere'))
        assert ConfigManager().config_dir == tmp_path / 'elsewhere'
        assert (tmp_path / 'elsewhere' / 'profiles').is_dir()

    def test_settings_default_when_missing(self, manager):
        assert manager.load_settings() == UserSettings()

    def test_settings_round_trip(self, manager):
        assert manager.save_settings(UserSettings(steps=500, epsilon=0.2))
        assert manager.load_settings() == UserSettings(steps=500, epsilon=0.2)

    def test_corrupt_settings_fall_back_to_defaults(self, manager):
        manager.settings_file.write_text('{not json')
        assert manager.load_settings() == UserSettings()

    def test_profiles(self, manager):
        manager.save_profile('quick', ExperimentConfig(steps=50, agent='dynaq'))
        assert manager.list_profiles() == ['quick']
        loaded = manager.load_profile('quick')
        assert loaded.steps == 50
        assert loaded.agent == 'dynaq'
        assert json.loads((manager.profiles_dir / 'quick.json').read_text())['steps'] == 50
        assert manager.delete_profile('quick')
        assert not manager.delete_profile('quick')

    def test_missing_profile(self, manager):
        with pytest.raises(FileNotFoundError):
            manager.load_profile('absent')
