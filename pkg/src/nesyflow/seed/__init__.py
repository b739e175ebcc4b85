"""Packaged starter data: the example corpus and the scripted eval tasks."""
