from typing import Any, Union, ClassVar, NoReturn, Optional
from pathlib import Path
import configparser

import attr

from tccbf._core.cache._cache import Cache, FileCache, NoopCache, MemoryCache
from tccbf.constants._pkg_constants import DEFAULT_OPTIONS

_SECTION = "tccbf"


def _is_positive(_instance, attribute: attr.Attribute, value: int) -> NoReturn:
    """Check whether the ``value`` is positive."""
    if value <= 0:
        raise ValueError(
            f"Expected `{attribute.name}` to be positive, found `{value}`."
        )


def _is_float_format(_instance, attribute: attr.Attribute, value: str) -> NoReturn:
    """Check whether the ``value`` formats a float."""
    try:
        value % 1.5
    except (TypeError, ValueError):
        raise ValueError(
            f"Expected `{attribute.name}` to be a `%`-style float format, found `{value!r}`."
        ) from None


def _cache_converter(value: Optional[Union[str, Path, Cache]]) -> Cache:
    """Convert ``value`` to :class:`tccbf._core.cache.Cache`."""
    if isinstance(value, Cache):
        return value

    if value is None or value == "None":
        return NoopCache()
    if value == "memory":
        return MemoryCache()

    return FileCache(value)


@attr.s
class Options:
    """
    Class defining various :mod:`tccbf` options.

    Parameters
    ----------
    output_dir
        Directory where the command line interface writes its files. Defaults to the
        environment variable ``TCCBF_OUTPUT_DIR``, if set.
    cache
        Cache for closed-loop runs. Valid options are:

            - `None`: do not cache anything.
            - `'memory'`: keep the runs in memory.
            - :class:`str`: persist the runs into a directory.

    num_workers
        Number of worker threads used by sweeps and comparisons.
    progress_bar
        Whether to show the progress bar during sweeps.
    float_format
        Format of floating point numbers in the written CSV files.
    """

    config_path: ClassVar[Path] = Path.home() / ".config" / "tccbf.ini"

    output_dir: Path = attr.ib(
        default=DEFAULT_OPTIONS.output_dir,
        converter=Path,
        on_setattr=attr.setters.convert,
    )
    cache: Cache = attr.ib(
        default=DEFAULT_OPTIONS.cache_dir,
        converter=_cache_converter,
        kw_only=True,
        on_setattr=attr.setters.convert,
    )
    num_workers: int = attr.ib(
        default=DEFAULT_OPTIONS.num_workers,
        validator=[attr.validators.instance_of(int), _is_positive],
        on_setattr=attr.setters.validate,
    )
    progress_bar: bool = attr.ib(
        default=DEFAULT_OPTIONS.progress_bar,
        repr=False,
        validator=attr.validators.instance_of(bool),
        on_setattr=attr.setters.validate,
    )
    float_format: str = attr.ib(
        default=DEFAULT_OPTIONS.float_format,
        validator=[attr.validators.instance_of(str), _is_float_format],
        on_setattr=attr.setters.validate,
    )

    def _create_config(self) -> configparser.ConfigParser:
        config = configparser.ConfigParser(interpolation=None)
        config[_SECTION] = {
            "output_dir": str(self.output_dir),
            "cache_dir": str(self.cache.path),
            "num_workers": self.num_workers,
            "progress_bar": self.progress_bar,
            "float_format": self.float_format,
        }

        return config

    @classmethod
    def from_config(cls) -> "Options":
        """
        Return the options from a configuration file.

        If :attr:`config_path` does not exist, the defaults are returned and nothing is written.

        Returns
        -------
        :class:`tccbf._core.utils.Options`
            The options.
        """
        if not cls.config_path.is_file():
            return cls()

        config = configparser.ConfigParser(interpolation=None)
        config.read(cls.config_path)
        if not config.has_section(_SECTION):
            return cls()

        return cls(
            output_dir=config.get(
                _SECTION, "output_dir", fallback=str(DEFAULT_OPTIONS.output_dir)
            ),
            cache=config.get(_SECTION, "cache_dir", fallback=None),
            num_workers=config.getint(
                _SECTION, "num_workers", fallback=DEFAULT_OPTIONS.num_workers
            ),
            progress_bar=config.getboolean(
                _SECTION, "progress_bar", fallback=DEFAULT_OPTIONS.progress_bar
            ),
            float_format=config.get(
                _SECTION, "float_format", fallback=DEFAULT_OPTIONS.float_format
            ),
        )

    @classmethod
    def from_options(cls, options: "Options", **kwargs: Any) -> "Options":
        """
        Create new options from previous options.

        Parameters
        ----------
        options
            Options from which to create new ones.
        **kwargs
            Keyword arguments overriding attributes from ``options``.

        Returns
        -------
            The newly created option.
        """
        if not isinstance(options, Options):
            raise TypeError(
                f"Expected `options` to be of type `Options`, found `{type(options)}`."
            )

        kwargs = {k: v for k, v in kwargs.items() if hasattr(options, k)}

        return cls(**{**options.__dict__, **kwargs})

    def write(self) -> "Options":
        """Write the current options to a configuration file."""
        self.config_path.parent.mkdir(parents=True, exist_ok=True)

        with open(self.config_path, "w") as fout:
            self._create_config().write(fout)

        return self

    def __enter__(self) -> "Options":
        return self.from_options(self)

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        pass


options = Options.from_config()


__all__ = [options, Options]
