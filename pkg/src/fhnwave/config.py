"""Global numerical settings.

Values are layered: keyword arguments over environment variables (and ``.env``
files) over a structured config file, ``fhnwave.toml`` by default. Nested
fields are reachable from the environment with ``__``, so
``INTEGRATOR__ORDER=10`` sets ``Config().integrator.order``.
"""

import abc
import json
import os
import tomllib
from collections.abc import Mapping
from pathlib import Path
from typing import TYPE_CHECKING, Any, TypeAlias, cast
from typing_extensions import override

import yaml
from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field

from fhnwave.typing import lenient_issubclass, type_is_complex
from fhnwave.utils import deep_update

DOTENV_TYPE: TypeAlias = Path | str | list[Path | str] | tuple[Path | str, ...]

ENV_FILE_SENTINEL = Path()

_config: "Config | None" = None


def get_config() -> "Config | None":
    """Get the global configuration object."""
    return _config


def init_config(
    *, _env_file: DOTENV_TYPE | None = None, _config_file: str | Path | None = None, **kwargs: Any
) -> None:
    """Initialize the global configuration object.

    Later calls are ignored until :func:`reset_config` drops the instance.
    """
    global _config  # noqa: PLW0603
    if not _config:
        env = Env()
        _env_file = _env_file or f".env.{env.environment}"
        _config = Config(
            **kwargs,
            _env_file=(
                (".env", _env_file) if isinstance(_env_file, (str, os.PathLike)) else _env_file
            ),
            _config_file=_config_file,
        )


class SettingsError(ValueError): ...


def read_structured_file(path: str | Path, encoding: str = "utf-8") -> dict[str, Any]:
    """Load a ``.toml``, ``.yaml``/``.yml`` or ``.json`` file into a dict.

    Raises:
        SettingsError: The file cannot be opened, parsed, or has an unknown suffix.
    """
    path = Path(path)
    name = str(path)
    try:
        if name.endswith(".toml"):
            with path.open("rb") as f:
                data = tomllib.load(f)
        elif name.endswith((".yml", ".yaml")):
            with path.open(encoding=encoding) as f:
                data = yaml.safe_load(f)
        elif name.endswith(".json"):
            with path.open(encoding=encoding) as f:
                data = json.load(f)
        else:
            raise ValueError("Read config file failed: Unable to determine config file type")
    except OSError as e:
        raise SettingsError(f"Can not open config file: {name!r}") from e
    except (
        ValueError,
        json.JSONDecodeError,
        tomllib.TOMLDecodeError,
        yaml.YAMLError,
    ) as e:
        raise SettingsError(f"Read config file failed: {name!r}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise SettingsError(f"Config file {name!r} must contain a table at top level")
    return data


class BaseSettingsSource(abc.ABC):
    def __init__(self, settings_cls: type["BaseSettings"]) -> None:
        self.settings_cls = settings_cls

    @property
    def config(self) -> "SettingsConfig":
        return cast("SettingsConfig", self.settings_cls.model_config)

    def _key(self, name: str) -> str:
        return name if self.config.get("case_sensitive", False) else name.lower()

    @abc.abstractmethod
    def __call__(self) -> dict[str, Any]:
        raise NotImplementedError


class InitSettingsSource(BaseSettingsSource):
    __slots__ = ("init_kwargs",)

    def __init__(self, settings_cls: type["BaseSettings"], init_kwargs: dict[str, Any]) -> None:
        self.init_kwargs = init_kwargs
        super().__init__(settings_cls)

    @override
    def __call__(self) -> dict[str, Any]:
        return self.init_kwargs

    @override
    def __repr__(self) -> str:
        return f"InitSettingsSource(init_kwargs={self.init_kwargs!r})"


class DotEnvSettingsSource(BaseSettingsSource):
    """Model fields from the process environment and dotenv files.

    The environment wins over the files. A nested model field takes either a
    JSON object under its own name or one variable per leaf joined with the
    nested delimiter; both merge, the per-leaf variables last.
    """

    def __init__(
        self,
        settings_cls: type["BaseSettings"],
        env_file: DOTENV_TYPE | None = ENV_FILE_SENTINEL,
    ) -> None:
        super().__init__(settings_cls)
        self.env_file = (
            env_file
            if env_file is not ENV_FILE_SENTINEL
            else self.config.get("env_file", (".env",))
        )
        self.encoding = self.config.get("env_file_encoding", "utf-8")
        self.delimiter = self.config.get("env_nested_delimiter", "__")

    def _normalize(self, env_vars: Mapping[str, str | None]) -> dict[str, str | None]:
        return {self._key(key): value for key, value in env_vars.items()}

    def _read_env_files(self) -> dict[str, str | None]:
        env_files = self.env_file
        if env_files is None:
            return {}
        if isinstance(env_files, (str, os.PathLike)):
            env_files = [env_files]

        dotenv_vars: dict[str, str | None] = {}
        for env_file in env_files:
            env_path = Path(env_file).expanduser()
            if env_path.is_file():
                dotenv_vars.update(
                    self._normalize(dotenv_values(env_path, encoding=self.encoding))
                )
        return dotenv_vars

    def _nested(self, name: str, env_vars: dict[str, str | None]) -> dict[str, Any]:
        if not self.delimiter:
            return {}
        prefix = f"{name}{self.delimiter}"
        result: dict[str, Any] = {}
        for env_name, env_val in env_vars.items():
            if not env_name.startswith(prefix) or env_val is None:
                continue
            *keys, last_key = env_name[len(prefix) :].split(self.delimiter)
            target = result
            for key in keys:
                target = target.setdefault(key, {})
            target[last_key] = env_val
        return result

    @override
    def __call__(self) -> dict[str, Any]:
        env_vars = {**self._read_env_files(), **self._normalize(os.environ)}
        d: dict[str, Any] = {}
        for name, field in self.settings_cls.model_fields.items():
            env_name = self._key(name)
            value: Any = env_vars.get(env_name)
            if value is not None and type_is_complex(field.annotation):
                try:
                    value = json.loads(value)
                except ValueError as e:
                    raise SettingsError(f'error parsing env var "{env_name}"') from e
            nested = (
                self._nested(env_name, env_vars)
                if lenient_issubclass(field.annotation, BaseModel)
                else {}
            )
            if isinstance(value, dict):
                d[name] = deep_update(value, nested)
            elif value is not None:
                d[name] = value
            elif nested:
                d[name] = nested
        return d


class DotFileSettingsSource(BaseSettingsSource):
    def __init__(
        self, settings_cls: type["BaseSettings"], config_file: str | Path | None = None
    ) -> None:
        super().__init__(settings_cls)
        self.config_file = config_file or self.config.get("config_file", "fhnwave.toml")
        self.encoding = self.config.get("config_file_encoding", "utf-8")

    def _convert_keys(self, obj: Any) -> Any:
        if isinstance(obj, dict):
            return {
                (self._key(k) if isinstance(k, str) else k): self._convert_keys(v)
                for k, v in obj.items()
            }
        if isinstance(obj, list):
            return [self._convert_keys(v) for v in obj]
        return obj

    @override
    def __call__(self) -> dict[str, Any]:
        """Read settings from the structured config file, if it exists."""
        if self.config_file is None or not Path(self.config_file).is_file():
            return {}
        return self._convert_keys(read_structured_file(self.config_file, self.encoding))


class SettingsConfig(ConfigDict, total=False):
    env_file: DOTENV_TYPE | None
    env_file_encoding: str
    env_nested_delimiter: str | None

    config_file: str | Path | None
    config_file_encoding: str

    case_sensitive: bool


class BaseSettings(BaseModel):
    model_config = SettingsConfig(
        extra="ignore",
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        config_file="fhnwave.toml",
        config_file_encoding="utf-8",
        case_sensitive=False,
    )

    def __init__(
        __settings_self__,  # pyright: ignore[reportSelfClsParameterName]  # noqa: N805
        _env_file: DOTENV_TYPE | None = ENV_FILE_SENTINEL,
        _config_file: str | Path | None = None,
        **values: Any,
    ) -> None:
        cls = __settings_self__.__class__
        super().__init__(
            **deep_update(
                DotFileSettingsSource(cls, config_file=_config_file)(),
                DotEnvSettingsSource(cls, env_file=_env_file)(),
                InitSettingsSource(cls, init_kwargs=values)(),
            )
        )


class Env(BaseSettings):
    environment: str = "prod"


class IntegratorSettings(BaseModel):
    """Taylor integrator knobs."""

    order: int = Field(default=12, ge=1)
    tolerance: float = Field(default=1e-16, gt=0)
    h_max: float = Field(default=1.0, gt=0)
    h_min: float = Field(default=1e-12, gt=0)
    max_enclosure_iters: int = Field(default=30, ge=1)
    inflation: float = Field(default=1.2, gt=1)
    padding: float = Field(default=1e-20, ge=0)


class MapLimits(BaseModel):
    """Fail-fast limits of a section map."""

    max_time: float = Field(default=1e3, gt=0)
    max_steps: int = Field(default=1_000_000, ge=1)
    max_width: float = Field(default=1.0, gt=0)
    time_tol: float = Field(default=1e-10, gt=0)
    max_halvings: int = Field(default=30, ge=0)


class Config(BaseSettings):
    if TYPE_CHECKING:
        _env_file: DOTENV_TYPE | None = ".env", ".env.prod"
        _config_file: str | Path | None = "fhnwave.toml"

    integrator: IntegratorSettings = IntegratorSettings()
    limits: MapLimits = MapLimits()

    jobs: int = 1
    log_level: str = "INFO"

    model_config = SettingsConfig(env_file=(".env", ".env.prod"))


def current_config() -> Config:
    """The global configuration, or the built-in defaults when none was initialized."""
    return _config if _config is not None else Config.model_construct()


def reset_config() -> None:
    """Drop the global configuration so the next ``init_config`` rebuilds it."""
    global _config  # noqa: PLW0603
    _config = None
