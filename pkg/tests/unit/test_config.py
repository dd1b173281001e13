"""
Unit tests for runtime settings and the thread pool helper.
"""

import os
from unittest.mock import patch

from qrom_lib.config import Settings, get_settings, override_settings, parallel_map


class TestSettings:
    """Test class for Settings.from_env."""

    @patch("qrom_lib.config.load_dotenv")
    def test_from_env(self, mock_dotenv):
        env = {"QROM_THREADS": "4", "QROM_MAX_DIMENSION": "1e3", "QROM_LOG_LEVEL": "DEBUG"}
        with patch.dict(os.environ, env):
            settings = Settings.from_env()
        assert settings.threads == 4
        assert settings.max_dimension == 1000
        assert settings.log_level == "DEBUG"
        assert settings.enumeration_cap == 10**6

    @patch("qrom_lib.config.load_dotenv")
    def test_bad_values_fall_back(self, mock_dotenv):
        with patch.dict(os.environ, {"QROM_MAP_CAP": "lots", "QROM_THREADS": "0"}):
            settings = Settings.from_env()
        assert settings.map_cap == 10**5
        assert settings.threads == 1


class TestOverride:
    """Test class for override_settings."""

    def test_scoped(self):
        before = get_settings()
        with override_settings(Settings(threads=5, max_rounds=3)) as active:
            assert get_settings() is active
            assert get_settings().max_rounds == 3
        assert get_settings() == before

    def test_none_keeps_current(self):
        before = get_settings()
        with override_settings(None) as active:
            assert active == before

    def test_nested(self):
        with override_settings(Settings(threads=2)):
            with override_settings(Settings(threads=7)):
                assert get_settings().threads == 7
            assert get_settings().threads == 2

    def test_visible_in_workers(self):
        with override_settings(Settings(threads=3, max_rounds=9)):
            seen = parallel_map(lambda _: get_settings().max_rounds, range(6))
        assert seen == [9] * 6


class TestParallelMap:
    """Test class for parallel_map."""

    def test_preserves_order(self):
        assert parallel_map(lambda x: x * x, range(10), threads=4) == [x * x for x in range(10)]

    def test_serial(self):
        assert parallel_map(str, [1, 2], threads=1) == ["1", "2"]
