from abc import ABC, abstractmethod
from copy import copy
from shutil import rmtree
from typing import Any, Union, Iterator, Optional
from pathlib import Path
from hashlib import md5
import os
import json
import pickle
import logging
import tempfile


def _storable(value: Any) -> bool:
    if value is None:
        return False
    try:
        return bool(len(getattr(value, "records", value)))
    except TypeError:
        return True


def cache_key(payload: Any) -> str:
    """Return the MD5 hash of the canonical JSON form of ``payload``."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return md5(text.encode("utf-8")).hexdigest()


class Cache(ABC):
    """
    Store of simulated runs, keyed by :func:`cache_key` of the scenario.

    `None` and trajectory logs without records are silently dropped on assignment.
    Missing keys raise :class:`KeyError`.
    """

    @abstractmethod
    def __getitem__(self, key: str) -> Any:
        pass

    @abstractmethod
    def __setitem__(self, key: str, value: Any) -> None:
        pass

    @abstractmethod
    def __len__(self) -> int:
        pass

    @abstractmethod
    def clear(self) -> None:  # noqa: D102
        pass

    @property
    @abstractmethod
    def path(self) -> Optional[Union[str, Path]]:  # noqa: D102
        pass

    @abstractmethod
    def __str__(self) -> str:
        pass

    def __repr__(self) -> str:
        return str(self)


class FileCache(Cache):
    """
    Cache pickling each run into its own file.

    Files are written to a temporary name first and then renamed, so threads of a parameter
    sweep never read a partially written run. Unreadable files count as missing.

    Parameters
    ----------
    path
        Directory holding the files, created on the first write.
    """

    _suffix = ".pickle"

    def __init__(self, path: Union[str, Path]):
        if not isinstance(path, (str, Path)):
            raise TypeError(
                f"Expected `path` to be either `str` or `pathlib.Path`, "
                f"found `{type(path).__name__}`."
            )
        if not str(path):
            raise ValueError("Empty cache path.")

        self._cache_dir = Path(path)

    def _file(self, key: str) -> Path:
        key = str(key)
        return self._cache_dir / (key if key.endswith(self._suffix) else key + self._suffix)

    def _files(self) -> Iterator[Path]:
        if self._cache_dir.is_dir():
            yield from self._cache_dir.glob(f"*{self._suffix}")

    def __contains__(self, key: str) -> bool:
        return self._file(key).is_file()

    def __setitem__(self, key: str, value: Any) -> None:
        if not _storable(value):
            return
        self._cache_dir.mkdir(parents=True, exist_ok=True)

        fd, tmp = tempfile.mkstemp(dir=self._cache_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fout:
                pickle.dump(value, fout, protocol=pickle.HIGHEST_PROTOCOL)
            os.replace(tmp, self._file(key))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise

    def __getitem__(self, key: str) -> Any:
        fname = self._file(key)
        try:
            with open(fname, "rb") as fin:
                return pickle.load(fin)
        except FileNotFoundError:
            raise KeyError(fname) from None
        except (EOFError, pickle.UnpicklingError, AttributeError) as e:
            logging.warning(f"Ignoring unreadable cache file `{fname}`: {e}")
            raise KeyError(fname) from None

    def __len__(self) -> int:
        return sum(1 for _ in self._files())

    @property
    def path(self) -> Path:
        """Directory of the cache files."""
        return self._cache_dir

    def clear(self) -> None:
        """Remove :attr:`path` with everything in it."""
        if self._cache_dir.is_dir():
            rmtree(self._cache_dir)

    def __str__(self) -> str:
        return f"<{self.__class__.__name__}[size={len(self)}, path={str(self.path)!r}]>"


class MemoryCache(dict, Cache):
    """
    Cache holding runs in a dictionary.

    Runs are copied with :func:`copy.copy` on the way in and out, so callers never share the
    records frame with the cache. Copying the cache itself returns the same object.
    """

    @property
    def path(self) -> Optional[str]:
        """Return `'memory'`."""
        return "memory"

    def __setitem__(self, key: str, value: Any) -> None:
        if _storable(value):
            super().__setitem__(key, copy(value))

    def __getitem__(self, key: str) -> Any:
        return copy(super().__getitem__(key))

    def __str__(self) -> str:
        return f"<{self.__class__.__name__}[size={len(self)}]>"

    def __repr__(self) -> str:
        return str(self)

    def __copy__(self) -> "MemoryCache":
        return self

    def copy(self) -> "MemoryCache":
        """Return self."""
        return self


class NoopCache(MemoryCache):
    """Cache which never stores anything."""

    @property
    def path(self) -> Optional[str]:
        """Return `None`."""
        return None

    def __setitem__(self, key: str, value: Any) -> None:
        pass

    def __str__(self):
        return f"<{self.__class__.__name__}>"


def clear_cache() -> None:
    """Remove all cached runs from :attr:`tccbf.options.cache`."""
    from tccbf import options

    options.cache.clear()
    logging.info(f"Cleared `{options.cache}`")


__all__ = [clear_cache]
