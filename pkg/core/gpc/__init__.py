# FILE: core/gpc/__init__.py
from __future__ import annotations
