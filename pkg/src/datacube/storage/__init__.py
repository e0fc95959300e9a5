from .objects import ObjectRef, ObjectStore, StorageClass
from .repos import Repository, RepositoryRegistry, RepoStatus, Visibility
from .exports import ExportManifest, package_export

__all__ = [
    "ExportManifest",
    "ObjectRef",
    "ObjectStore",
    "package_export",
    "Repository",
    "RepositoryRegistry",
    "RepoStatus",
    "StorageClass",
    "Visibility",
]
