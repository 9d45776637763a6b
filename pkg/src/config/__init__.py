"""
Configuration management module.

This module provides configuration loading and validation for the toolkit.
"""

from .config import ApplicationConfiguration, ConfigurationManager, get_config, set_config_manager

__all__ = ['ApplicationConfiguration', 'ConfigurationManager', 'get_config', 'set_config_manager']
