import re
from typing import List, Optional

from braceexpand import braceexpand
from google.cloud.storage import Client

from .codec import parse_grid
from .grid import GridModel


def read_grid_gcs(filename: str, storage_client: Optional[Client] = None) -> GridModel:
    r"""
    Read a grid JSON file from Google Cloud Storage.

    Example::

        >>> grid = read_grid_gcs("gs://bucket-name/grids/star.json")

    Args:
        filename (str): Path to the grid file in Cloud Storage.
        storage_client (Optional[Client]): Client to use. A default client is created if ``None``.
    """
    assert filename.startswith("gs:")
    # parse bucket and blob names from the filename
    filename = re.sub(r"^gs://?", "", filename)
    bucket_name, blob_name = filename.split("/", 1)

    if storage_client is None:
        storage_client = Client()

    blob = storage_client.bucket(bucket_name).blob(blob_name)
    return parse_grid(blob.download_as_bytes().decode("utf-8"))


def read_grid_local(filename: str) -> GridModel:
    r"""
    Read a grid JSON file from the local disk.

    Args:
        filename (str): Path to the local grid file, optionally prefixed with ``file://``.
    """
    filename = re.sub(r"^file://?", "", filename)
    with open(filename, "r", encoding="utf-8") as f:
        return parse_grid(f.read())


def read_grid_file(filename: str, **kwargs) -> GridModel:
    r"""
    Read a grid JSON file from a filename or URL.

    Args:
        filename (str): Local path, ``file://`` URL or ``gs://`` URL.
    """
    if filename.startswith("gs:"):
        return read_grid_gcs(filename, **kwargs)

    return read_grid_local(filename)


def read_grid_files(pattern: str, **kwargs) -> List[GridModel]:
    r"""
    Read every grid named by a brace pattern such as ``grids/case{1..3}.json``.
    """
    return [read_grid_file(filename, **kwargs) for filename in braceexpand(pattern)]
