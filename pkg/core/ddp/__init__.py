# FILE: core/ddp/__init__.py
from __future__ import annotations
