"""Pytest wiring: configure Django before the apps' tests.py modules are collected."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'nwp_fairness.settings')
django.setup()
