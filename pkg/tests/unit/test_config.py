#!/usr/bin/env python3
"""
Unit tests for Configuration module.

Tests cover:
- Configuration loading
- Schema validation
- Default values
- Configuration updates
- Error handling
"""

import unittest
import json
import os
import tempfile
import sys
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..'))

from src.config import Config
from src.modules.comparator import ComparatorConfig
from src.utils.exceptions import ConfigurationError


class TestConfig(unittest.TestCase):
    """Test cases for Config class."""

    def setUp(self):
        """Set up test environment."""
        self.temp_dir = tempfile.mkdtemp()

        self.sample_config = {
            "comparator": {
                "q": 3,
                "k": 5,
                "epsilon": 0.01,
                "max_samples": 32
            },
            "composer": {
                "max_formula_depth": 4
            },
            "logging": {
                "level": "DEBUG",
                "file_path": None,
                "console": False
            }
        }

    def tearDown(self):
        """Clean up test environment."""
        import shutil
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def create_test_config_file(self, filename: str, config_data: dict = None):
        """Create a test configuration file."""
        if config_data is None:
            config_data = self.sample_config

        filepath = os.path.join(self.temp_dir, filename)
        with open(filepath, 'w') as f:
            json.dump(config_data, f, indent=2)

        return filepath

    def test_default_config_loading(self):
        """Packaged defaults agree with the dataclass defaults."""
        config = Config().load()
        self.assertEqual(ComparatorConfig.from_config(config), ComparatorConfig())
        self.assertEqual(config.get('composer.max_formula_depth'), 8)
        self.assertEqual(config.get('output.indent'), 2)
        self.assertEqual(config.get_output_config(), {'indent': 2})

    def test_custom_config_file_loading(self):
        config = Config(self.create_test_config_file('custom_config.json'))
        cfg = ComparatorConfig.from_config(config)
        self.assertEqual((cfg.q, cfg.k, cfg.epsilon, cfg.max_samples), (3, 5, 0.01, 32))
        # unspecified knobs keep their defaults
        self.assertEqual(cfg.tmax, 60)
        self.assertEqual(config.get_composer_config(), {"max_formula_depth": 4})

    def test_nonexistent_config_file(self):
        with self.assertRaises(ConfigurationError):
            Config('/nonexistent/config.json').load()

    def test_invalid_json_config(self):
        invalid_config_file = os.path.join(self.temp_dir, 'invalid.json')
        with open(invalid_config_file, 'w') as f:
            f.write('{ invalid json content }')

        with self.assertRaises(ConfigurationError):
            Config(invalid_config_file).load()

    def test_missing_comparator_section(self):
        config_file = self.create_test_config_file('no_comparator.json', {"composer": {}})
        with self.assertRaises(ConfigurationError):
            Config(config_file).load()

    def test_unknown_comparator_key(self):
        config_file = self.create_test_config_file('unknown_key.json', {"comparator": {"speed": 2}})
        with self.assertRaises(ConfigurationError) as ctx:
            Config(config_file).load()
        self.assertIn('comparator', str(ctx.exception))

    def test_wrong_value_type(self):
        config_file = self.create_test_config_file('wrong_type.json', {"comparator": {"q": "two"}})
        with self.assertRaises(ConfigurationError):
            Config(config_file).load()

    def test_out_of_range_value_rejected_by_comparator(self):
        config_file = self.create_test_config_file('bad_range.json', {"comparator": {"q": 1}})
        config = Config(config_file)
        with self.assertRaises(ConfigurationError):
            ComparatorConfig.from_config(config)

    def test_get_with_default(self):
        config = Config()
        self.assertEqual(config.get('non.existent.parameter', default='default_value'), 'default_value')
        self.assertIsNone(config.get('comparator.q.deeper'))

    def test_update(self):
        config = Config()
        config.update('comparator.epsilon', 0.05)
        config.update('new_section.new_parameter', 'test_value')
        self.assertEqual(config.get('comparator.epsilon'), 0.05)
        self.assertEqual(config.get('new_section.new_parameter'), 'test_value')

    def test_save_configuration(self):
        config = Config(self.create_test_config_file('to_save.json'))
        config.update('comparator.k', 6)

        save_path = os.path.join(self.temp_dir, 'saved_config.json')
        config.save(save_path)

        self.assertTrue(os.path.exists(save_path))
        with open(save_path, 'r') as f:
            saved_data = json.load(f)
        self.assertEqual(saved_data['comparator']['k'], 6)

    def test_to_dict_is_a_copy(self):
        config = Config()
        data = config.to_dict()
        data['comparator']['q'] = 99
        self.assertEqual(config.get('comparator.q'), 2)

    def test_str(self):
        config = Config(self.create_test_config_file('named.json'))
        self.assertIn('comparator', str(config))


if __name__ == '__main__':
    unittest.main()
