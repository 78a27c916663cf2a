"""
Environment configuration and runtime overrides.
"""

from pathlib import Path

from psp.config import Config, RuntimeConfig, config


def test_defaults_are_sane():
    assert config.PSP_THREADS >= 1
    assert 0.0 <= config.PSP_EPSILON <= 1.0
    assert config.PSP_MC_SAMPLES >= 100
    assert config.out_dir_path == Path(config.PSP_OUT_DIR)
    assert 'epsilon=' in repr(config)


def test_runtime_threads_override(monkeypatch):
    monkeypatch.setattr(RuntimeConfig, '_threads', None)
    monkeypatch.setattr(RuntimeConfig, '_threads_source', 'config')
    assert RuntimeConfig.get_threads() == Config.PSP_THREADS
    RuntimeConfig.set_threads(0)
    assert RuntimeConfig.get_threads() == 1
    assert RuntimeConfig.get_threads_source() == 'flag'
    RuntimeConfig.set_threads(3, source='test')
    assert RuntimeConfig.get_threads() == 3
