"""Logging, validation, seeded random streams and JSON helpers"""
