# -*- coding: utf-8 -*-

from persistence.artifact_store import ArtifactStore

__all__ = ['ArtifactStore']
