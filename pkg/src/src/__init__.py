from __future__ import absolute_import, unicode_literals

from src.celery import app


__all__ = ('app',)