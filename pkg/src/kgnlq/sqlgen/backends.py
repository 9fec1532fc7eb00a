"""Generation backends behind a single interface.

The HTTP backend speaks the generic chat-completion protocol. The oracle
backend inverts the question-template grammar and emits the matching gold
SQL, which lets every pipeline test run deterministically with no model in
the loop. The faulty backend wraps the oracle to inject first-attempt
failures for self-correction tests.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from typing import Any

import requests

from .prompts import Prompt

logger = logging.getLogger(__name__)

PLACEHOLDER_PATTERN = r"\[[A-Z][A-Z0-9_]*_\d+\]"
REFUSAL_TEXT = "I cannot match this question to a known pattern."


class BackendError(Exception):
    pass


class GenerationBackend:
    """Interface: a named generator turning a Prompt into raw text."""

    name = "base"

    def generate(self, prompt: Prompt) -> str:
        raise NotImplementedError

    @property
    def identity(self) -> str:
        return self.name


class HttpChatBackend(GenerationBackend):
    """Generic chat-completion client.

    POSTs to ``{base_url}/chat/completions`` with a bearer token read from
    the environment, and retries 429/5xx responses with exponential backoff.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        key_env: str = "KGNLQ_API_KEY",
        temperature: float = 0.0,
        timeout_s: float = 60.0,
        max_retries: int = 3,
        max_in_flight: int = 4,
        session: Any = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.key_env = key_env
        self.temperature = temperature
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max_in_flight)
        self.name = f"http-chat:{model}"

    def generate(self, prompt: Prompt) -> str:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.key_env, "")
        if token:
            headers["Authorization"] = f"Bearer {token}"
        body = {
            "model": self.model,
            "messages": prompt.messages(),
            "temperature": self.temperature,
        }
        url = f"{self.base_url}/chat/completions"
        backoff = 1.0
        last_error = "no attempt made"
        for attempt in range(self.max_retries + 1):
            with self._gate:
                try:
                    resp = self._session.post(
                        url, json=body, headers=headers, timeout=self.timeout_s
                    )
                except requests.RequestException as exc:
                    raise BackendError(f"chat request failed: {exc}") from exc
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                if attempt < self.max_retries:
                    time.sleep(backoff)
                    backoff *= 2
                    continue
                raise BackendError(f"chat request failed after retries: {last_error}")
            if resp.status_code != 200:
                raise BackendError(f"chat request failed: HTTP {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise BackendError(f"malformed chat response: {exc}") from exc
        raise BackendError(f"chat request failed: {last_error}")


class OracleBackend(GenerationBackend):
    """Rule-based inverse of the question-template grammar.

    Matches the templated question against every template's NL pattern with
    its slots generalized to placeholder tokens, and emits the corresponding
    SQL pattern with the same tokens. Unknown phrasings get a refusal, which
    downstream treats as an extraction failure.
    """

    name = "oracle"

    def __init__(self, template_table: Any):
        self.template_table = template_table
        self._compiled: list[tuple[Any, re.Pattern[str], list[str]]] = []
        for row in template_table.rows:
            slots = re.findall(r"\{([A-Z][A-Z0-9_]*)\}", row.nl_pattern)
            pattern = re.escape(row.nl_pattern)
            for slot in dict.fromkeys(slots):
                pattern = pattern.replace(
                    re.escape("{" + slot + "}"), f"(?P<{slot}>{PLACEHOLDER_PATTERN})"
                )
            self._compiled.append((row, re.compile(pattern), slots))

    def match(self, templated_question: str) -> tuple[Any, str] | None:
        """Return (template row, SQL with placeholder tokens) or None."""
        text = templated_question.strip()
        for row, pattern, slots in self._compiled:
            m = pattern.fullmatch(text)
            if m:
                sql = row.sql_pattern
                for slot in dict.fromkeys(slots):
                    sql = sql.replace("{" + slot + "}", m.group(slot))
                return row, sql
        return None

    def generate(self, prompt: Prompt) -> str:
        found = self.match(prompt.templated_question)
        if found is None:
            return REFUSAL_TEXT
        row, sql = found
        return (
            f"The question follows the {row.hops}-hop pattern {row.template_id}.\n"
            f"```sql\n{sql}\n```"
        )


FAULT_KINDS = ("column", "table", "relation", "refusal")


class FaultyBackend(GenerationBackend):
    """Oracle wrapper that corrupts its first answer.

    ``repairable`` backends emit the clean SQL once the prompt carries a
    correction turn, modelling a generator that reads error feedback;
    non-repairable ones stay broken, modelling a hard capability gap.
    ``only_hops`` restricts the fault to questions of one hop count.
    """

    def __init__(
        self,
        oracle: OracleBackend,
        fault: str = "column",
        only_hops: int | None = None,
        repairable: bool = True,
    ):
        if fault not in FAULT_KINDS:
            raise ValueError(f"unknown fault kind {fault!r}")
        self.oracle = oracle
        self.fault = fault
        self.only_hops = only_hops
        self.repairable = repairable
        self.name = f"faulty({fault})"

    def _corrupt(self, sql: str) -> str:
        if self.fault == "column":
            return sql.replace("node_name", "node_nam", 1)
        if self.fault == "table":
            return sql.replace("FROM nodes", "FROM nodez", 1)
        if self.fault == "relation":
            return re.sub(r"relation = '[^']*'", "relation = 'no_such_relation'", sql, count=1)
        return sql

    def generate(self, prompt: Prompt) -> str:
        found = self.oracle.match(prompt.templated_question)
        if found is None:
            return REFUSAL_TEXT
        row, sql = found
        if self.only_hops is not None and row.hops != self.only_hops:
            return f"Clean answer for pattern {row.template_id}.\n```sql\n{sql}\n```"
        corrected = self.repairable and bool(prompt.corrections)
        if corrected:
            return f"Corrected answer for pattern {row.template_id}.\n```sql\n{sql}\n```"
        if self.fault == "refusal":
            return "I am unable to produce a query for this question."
        return f"Answer for pattern {row.template_id}.\n```sql\n{self._corrupt(sql)}\n```"
