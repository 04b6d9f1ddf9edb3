#!/usr/bin/env python3
"""Configuration management for sdyna experiments"""

import json
import logging
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, Any, List, Optional

from sdyna.utils.errors import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_TAU_GRID = [0.5, 1.0, 2.0, 3.84, 6.63, 7.88, 10.8]
DEFAULT_SIZES = [4, 8, 12, 16, 20]

AGENT_KINDS = ('spiti', 'dynaq', 'random', 'optimal')
MODES = ('online', 'tau-sweep', 'generalization')
METRICS = ('xi', 'qchi2')
FAMILIES = ('linear', 'expon', 'noisy')


@dataclass
class UserSettings:
    """Per-user defaults for CLI options"""
    tau: float = 7.88
    epsilon: float = 0.1
    gamma: float = 0.9
    gamma_report: float = 0.99
    steps: int = 4000
    runs: int = 20
    metric_every: int = 100
    workers: int = 1

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'UserSettings':
        """Create from dictionary, ignoring unknown keys"""
        known_fields = {f.name for f in cls.__dataclass_fields__.values()}
        filtered_data = {k: v for k, v in data.items() if k in known_fields}
        return cls(**filtered_data)


@dataclass
class ExperimentConfig:
    """One experiment: problem, agent, protocol and output"""
    problem: str = 'builtin:coffee'
    agent: str = 'spiti'
    mode: str = 'online'
    tau: float = 7.88
    epsilon: float = 0.1
    gamma: float = 0.9
    gamma_report: float = 0.99
    steps: int = 4000
    runs: int = 20
    seed: int = 0
    metrics: List[str] = field(default_factory=list)
    metric_every: int = 100
    out: Optional[str] = None
    taus: List[float] = field(default_factory=lambda: list(DEFAULT_TAU_GRID))
    sizes: List[int] = field(default_factory=lambda: list(DEFAULT_SIZES))
    family: str = 'noisy'
    theta: float = 0.2
    workers: int = 1
    restructure_margin: float = 0.0
    evaluation_tolerance: float = 1e-11
    model_out: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        """Create from dictionary, ignoring unknown keys"""
        known_fields = {f.name for f in cls.__dataclass_fields__.values()}
        filtered_data = {k: v for k, v in data.items() if k in known_fields}
        return cls(**filtered_data)

    def validate(self) -> None:
        """Raise ValidationError listing every violated constraint"""
        problems = []
        if self.runs < 1:
            problems.append(f"runs must be >= 1 (got {self.runs})")
        if self.steps < 1:
            problems.append(f"steps must be >= 1 (got {self.steps})")
        if self.agent not in AGENT_KINDS:
            problems.append(f"unknown agent '{self.agent}' (expected one of {', '.join(AGENT_KINDS)})")
        if self.mode not in MODES:
            problems.append(f"unknown mode '{self.mode}' (expected one of {', '.join(MODES)})")
        for metric in self.metrics:
            if metric not in METRICS:
                problems.append(f"unknown metric '{metric}'")
        if not 0.0 <= self.epsilon <= 1.0:
            problems.append(f"epsilon must lie in [0, 1] (got {self.epsilon})")
        if not 0.0 <= self.gamma < 1.0:
            problems.append(f"gamma must lie in [0, 1) (got {self.gamma})")
        if not 0.0 <= self.gamma_report < 1.0:
            problems.append(f"gamma_report must lie in [0, 1) (got {self.gamma_report})")
        if self.tau < 0:
            problems.append(f"tau must be >= 0 (got {self.tau})")
        if self.metric_every < 1:
            problems.append(f"metric_every must be >= 1 (got {self.metric_every})")
        if self.workers < 1:
            problems.append(f"workers must be >= 1 (got {self.workers})")
        if self.mode == 'tau-sweep' and not self.taus:
            problems.append("tau-sweep needs at least one tau")
        if self.mode == 'generalization':
            if self.family not in FAMILIES:
                problems.append(f"unknown family '{self.family}'")
            if not self.sizes:
                problems.append("generalization needs at least one size")
        if problems:
            raise ValidationError(problems)


class ConfigManager:
    """Manage user settings and saved experiment profiles"""

    def __init__(self, config_dir: Optional[Path] = None):
        if config_dir is None:
            override = os.environ.get('SDYNA_CONFIG_DIR')
            config_dir = Path(override) if override else Path.home() / '.config' / 'sdyna'
        self.config_dir = Path(config_dir)
        self.profiles_dir = self.config_dir / 'profiles'
        self.settings_file = self.config_dir / 'settings.json'
        self._ensure_dirs()
        self._default_settings = UserSettings()

    def _ensure_dirs(self):
        """Ensure configuration directories exist"""
        self.config_dir.mkdir(parents=True, exist_ok=True)
        self.profiles_dir.mkdir(parents=True, exist_ok=True)

    def load_settings(self) -> UserSettings:
        """Load user settings, with defaults if not set"""
        try:
            if self.settings_file.exists():
                with open(self.settings_file, 'r', encoding='utf-8') as f:
                    return UserSettings.from_dict(json.load(f))
            return UserSettings()
        except Exception as e:
            logger.error(f"Error loading settings: {e}")
            return UserSettings()

    def save_settings(self, settings: UserSettings) -> bool:
        """Save user settings"""
        try:
            with open(self.settings_file, 'w', encoding='utf-8') as f:
                json.dump(settings.to_dict(), f, indent=2)
            return True
        except Exception as e:
            logger.error(f"Error saving settings: {e}")
            return False

    def _profile_path(self, name: str) -> Path:
        filepath = self.profiles_dir / name
        if not name.endswith('.json'):
            filepath = filepath.with_suffix('.json')
        return filepath

    def save_profile(self, name: str, config: ExperimentConfig) -> Path:
        """Save an experiment configuration under a profile name"""
        filepath = self._profile_path(name)
        with open(filepath, 'w', encoding='utf-8') as f:
            json.dump(config.to_dict(), f, indent=2)
        logger.info(f"Saved profile {filepath.stem}")
        return filepath

    def load_profile(self, name: str) -> ExperimentConfig:
        """Load a saved experiment configuration"""
        filepath = self._profile_path(name)
        if not filepath.exists():
            raise FileNotFoundError(f"Profile not found: {filepath}")
        with open(filepath, 'r', encoding='utf-8') as f:
            return ExperimentConfig.from_dict(json.load(f))

    def list_profiles(self) -> List[str]:
        """List all saved profiles"""
        return sorted(p.stem for p in self.profiles_dir.glob('*.json'))

    def delete_profile(self, name: str) -> bool:
        """Delete a saved profile"""
        filepath = self._profile_path(name)
        if filepath.exists():
            filepath.unlink()
            return True
        return False
