import os
from typing import Any, Dict, List, Optional, Union

Value = Union[str, int, float, bool]


class ConfigError(Exception):
    def __init__(self, line: int, message: str):
        super().__init__("line %d: %s" % (line, message))
        self.line = line


def coerce(raw: str) -> Value:
    lowered = raw.lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        return raw


def strip_comment(line: str) -> str:
    index = line.find("#")
    if index >= 0:
        line = line[:index]
    return line.strip()


def parse(text: str) -> Dict[str, Dict[str, Value]]:
    sections: Dict[str, Dict[str, Value]] = {}
    current = "default"
    for number, raw in enumerate(text.splitlines(), 1):
        line = strip_comment(raw)
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(number, "expected key = value")
        key, value = line.split("=", 1)
        sections.setdefault(current, {})[key.strip()] = coerce(value.strip())
    return sections


class Settings:
    def __init__(self, data: Dict[str, Dict[str, Value]], env_prefix: str = "APP_"):
        self.data = data
        self.env_prefix = env_prefix

    def get(self, section: str, key: str, default: Optional[Value] = None) -> Optional[Value]:
        env = os.environ.get(self.env_prefix + key.upper())
        if env is not None:
            return coerce(env)
        return self.data.get(section, {}).get(key, default)

    def sections(self) -> List[str]:
        return sorted(self.data)

    def keys(self, section: str) -> List[str]:
        return sorted(self.data.get(section, {}))

    def as_flat(self) -> Dict[str, Any]:
        flat = {}
        for section, values in self.data.items():
            for key, value in values.items():
                flat[section + "." + key] = value
        return flat


def load(path: str) -> Settings:
    with open(path) as fh:
        return Settings(parse(fh.read()))
