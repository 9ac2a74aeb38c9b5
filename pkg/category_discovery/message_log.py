from __future__ import annotations

import logging
import textwrap
from pathlib import Path
from typing import Iterable, List, Reversible

from category_discovery.exceptions import DatasetIOError

logger = logging.getLogger(__name__)


class Message:
    def __init__(self, text: str, level: int):
        self.plain_text = text
        self.level = level
        self.count = 1

    @property
    def full_text(self) -> str:
        """The full text of this message, including the count if necessary."""
        if self.count > 1:
            return f"{self.plain_text} (x{self.count})"
        return self.plain_text

    @property
    def level_name(self) -> str:
        return logging.getLevelName(self.level)


class MessageLog:
    """The narrative of one run, written to ``run.log`` next to its outputs."""

    def __init__(self, name: str = "category_discovery.run") -> None:
        self.messages: List[Message] = []
        self._logger = logging.getLogger(name)

    def add_message(
        self, text: str, level: int = logging.INFO, *, stack: bool = True,
    ) -> None:
        """Add a message to this log.
        `text` is the message text, `level` a `logging` level.
        If `stack` is True then the message can stack with a previous message
        of the same text.
        """
        self._logger.log(level, text)
        if stack and self.messages and text == self.messages[-1].plain_text:
            self.messages[-1].count += 1
        else:
            self.messages.append(Message(text, level))

    @staticmethod
    def wrap(string: str, width: int) -> Iterable[str]:
        """Return a wrapped text message."""
        for line in string.splitlines():  # Handle newlines in messages.
            yield from textwrap.wrap(
                line, width, expand_tabs=True,
            ) or [""]

    @classmethod
    def render_messages(
        cls, messages: Reversible[Message], width: int = 100,
    ) -> List[str]:
        """Render the messages provided, oldest first.

        Continuation lines of a wrapped message are indented under its text.
        """
        lines: List[str] = []
        for message in messages:
            prefix = f"{message.level_name:<8} "
            for i, line in enumerate(cls.wrap(message.full_text, width - len(prefix))):
                lines.append((prefix if i == 0 else " " * len(prefix)) + line)
        return lines

    def render(self, width: int = 100) -> List[str]:
        return self.render_messages(self.messages, width)

    def save_as(self, filename: Path) -> None:
        """Write this log as plain text."""
        try:
            Path(filename).write_text("\n".join(self.render()) + "\n", encoding="utf-8")
        except OSError as e:
            raise DatasetIOError(str(filename), e.strerror or str(e)) from e
        logger.debug("Wrote %d log messages to %s", len(self.messages), filename)
