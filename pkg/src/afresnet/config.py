"""Architecture configuration grammar.

A configuration string has four semicolon-separated fields::

    <input_filters> ; <layout> ; [<filters>, ...] ; [<blocks>, ...]

e.g. ``32; cna; [4, 8, 16, 32, 64, 128, 256]; [1, 1, 1, 1, 1, 1, 1]``

* ``input_filters`` -- width of the initial convolution,
* ``layout``        -- per-block layer sequence over (c)onvolution,
  (n)ormalization and (a)ctivation,
* ``filters``       -- convolution width of each residual group,
* ``blocks``        -- number of residual blocks in each group.

Whitespace is insignificant on input; :func:`format_config` emits the
canonical form with a single space after each ``;`` and ``,``.
"""

from __future__ import annotations

from dataclasses import dataclass, field


LAYOUT_ALPHABET = frozenset("cna")


class ConfigError(ValueError):
    """Base class for configuration string problems."""


class ConfigParseError(ConfigError):
    """Malformed syntax. ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ConfigValidationError(ConfigError):
    """Syntactically fine but violates a structural rule."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class ModelConfig:
    """Parsed architecture genome: {input_filters; layout; filters; blocks}."""

    input_filters: int
    layout: str
    filters: tuple[int, ...]
    blocks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "filters", tuple(self.filters))
        object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def n_groups(self) -> int:
        return len(self.filters)


def validate(cfg: ModelConfig) -> list[str]:
    """Return the list of violated rules; empty when ``cfg`` is valid."""
    violations = []
    if cfg.input_filters < 1:
        violations.append("input_filters must be ≥ 1")
    illegal = sorted(set(cfg.layout) - LAYOUT_ALPHABET)
    for sym in illegal:
        violations.append(f"layout contains illegal symbol '{sym}'")
    if not illegal and "c" not in cfg.layout:
        violations.append("layout must contain at least one 'c'")
    if len(cfg.filters) == 0:
        violations.append("filters must contain at least one group")
    if len(cfg.blocks) == 0:
        violations.append("blocks must contain at least one group")
    if cfg.filters and cfg.blocks and len(cfg.filters) != len(cfg.blocks):
        violations.append("filters/blocks length mismatch")
    if any(f < 1 for f in cfg.filters):
        violations.append("filters must be ≥ 1")
    if any(b < 1 for b in cfg.blocks):
        violations.append("blocks must be ≥ 1")
    return violations


class _Cursor:
    """Single-pass scanner over a configuration string."""

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str):
        self.skip_ws()
        if self.peek() != char:
            raise ConfigParseError(f"expected '{char}'", self.pos)
        self.pos += 1

    def integer(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] in "0123456789":
            self.pos += 1
        if self.pos == start:
            raise ConfigParseError("expected integer", start)
        return int(self.text[start : self.pos])

    def word(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalpha():
            self.pos += 1
        if self.pos == start:
            raise ConfigParseError("expected layout word", start)
        return self.text[start : self.pos]

    def int_list(self) -> tuple[int, ...]:
        self.expect("[")
        values = [self.integer()]
        while True:
            self.skip_ws()
            if self.peek() == ",":
                self.pos += 1
                values.append(self.integer())
            elif self.peek() == "]":
                self.pos += 1
                return tuple(values)
            else:
                raise ConfigParseError("expected ',' or ']'", self.pos)

    def end(self):
        self.skip_ws()
        if self.pos < len(self.text):
            raise ConfigParseError("unexpected trailing input", self.pos)


def parse_config(text: str) -> ModelConfig:
    """Parse a configuration string.

    Raises :class:`ConfigParseError` on malformed syntax (with character
    position) and :class:`ConfigValidationError` when the parsed values
    violate a structural rule.
    """
    cur = _Cursor(text)
    input_filters = cur.integer()
    cur.expect(";")
    layout = cur.word()
    cur.expect(";")
    filters = cur.int_list()
    cur.expect(";")
    blocks = cur.int_list()
    cur.end()
    cfg = ModelConfig(input_filters, layout, filters, blocks)
    violations = validate(cfg)
    if violations:
        raise ConfigValidationError(violations)
    return cfg


def format_config(cfg: ModelConfig) -> str:
    """Canonical form; ``parse_config(format_config(cfg)) == cfg``."""
    filters = ", ".join(str(f) for f in cfg.filters)
    blocks = ", ".join(str(b) for b in cfg.blocks)
    return f"{cfg.input_filters}; {cfg.layout}; [{filters}]; [{blocks}]"


def read_config_lines(path) -> list[str]:
    """Read one configuration (or preset name) per line; '#' lines and blank
    lines are ignored. Entries are returned verbatim, unparsed."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                entries.append(line)
    return entries
