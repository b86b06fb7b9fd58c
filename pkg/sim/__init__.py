# FILE: sim/__init__.py
from __future__ import annotations
