"""Tests for the configuration module."""

import os
import tempfile
from unittest import TestCase

from loo_subsample.config import RunConfig, load_config
from loo_subsample.errors import InputValidationError


class TestConfig(TestCase):
    """Tests for the configuration module."""

    def setUp(self):
        """Set up test environment."""
        # Create a temporary config file
        self.config_file = tempfile.NamedTemporaryFile(delete=False, suffix=".env")
        self.config_file.write(b"""
# estimate settings
seed=20240101
m=50
surrogate=tis
draws_used=200
scheme=srs_wr
sparse=yes
target_r2=0.25
""")
        self.config_file.close()

    def tearDown(self):
        """Clean up after tests."""
        os.unlink(self.config_file.name)

    def test_load_config(self):
        """Test loading configuration from file."""
        config = load_config(self.config_file.name)

        self.assertIsInstance(config, RunConfig)
        self.assertEqual(config.seed, 20240101)
        self.assertEqual(config.m, 50)
        self.assertEqual(config.surrogate, "tis")
        self.assertEqual(config.draws_used, 200)
        self.assertEqual(config.scheme, "srs_wr")
        self.assertTrue(config.sparse)
        self.assertEqual(config.target_r2, 0.25)

        # Defaults for keys not in the file
        self.assertEqual(config.threads, 1)
        self.assertEqual(config.replicates, 100)
        self.assertIsNone(config.out)

    def test_overrides_win(self):
        """Test that command-line values replace file values and None is ignored."""
        config = load_config(self.config_file.name, {"m": 80, "seed": 7, "surrogate": None})
        self.assertEqual(config.m, 80)
        self.assertEqual(config.seed, 7)
        self.assertEqual(config.surrogate, "tis")

    def test_missing_config_file(self):
        """Test handling of missing config file."""
        with self.assertRaises(FileNotFoundError) as ctx:
            load_config("nonexistent_file.env")
        self.assertIn("config.template.env", str(ctx.exception))

    def test_unknown_key(self):
        """Test that a misspelled key is an error."""
        with tempfile.NamedTemporaryFile(delete=False, suffix=".env") as config_file:
            config_file.write(b"seed=1\nsubsample=10\n")
            config_file.close()
            try:
                with self.assertRaises(InputValidationError):
                    load_config(config_file.name)
            finally:
                os.unlink(config_file.name)

    def test_seed_required(self):
        """Test that every command except verify needs a seed."""
        with self.assertRaises(InputValidationError):
            load_config(None, {"command": "estimate"})
        self.assertIsNone(load_config(None, {"command": "verify"}).seed)

    def test_invalid_values(self):
        """Test bad numbers, booleans, names and seeds."""
        for overrides in (
            {"seed": 1, "m": "ten"},
            {"seed": 1, "sparse": "maybe"},
            {"seed": 1, "surrogate": "loo"},
            {"seed": 1, "scheme": "cluster"},
            {"seed": -1},
            {"seed": 1, "threads": 0},
        ):
            with self.subTest(overrides=overrides):
                with self.assertRaises(InputValidationError):
                    load_config(None, overrides)

    def test_missing_input_file(self):
        """Test that a configured input path must exist."""
        with self.assertRaises(FileNotFoundError):
            load_config(None, {"seed": 1, "loglik": "/nonexistent/loglik.csv"})
