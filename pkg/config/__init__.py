"""
Performative Control - Configuration
Chargement et validation du fichier YAML
"""

from config.schema import Settings, load_settings, parse_settings, DEFAULT_CONFIG_PATH

__all__ = [
    'Settings',
    'load_settings',
    'parse_settings',
    'DEFAULT_CONFIG_PATH',
]
