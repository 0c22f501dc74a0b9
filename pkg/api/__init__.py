"""
Performative Control - API
Interface en ligne de commande
"""

from api.cli import app, main

__all__ = [
    'app',
    'main',
]
