"""Runtime configuration and resource loading."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .errors import KasError
from .grammar import Grammar, load_grammar
from .knowledge import KnowledgeModel, load_knowledge
from .quantrules import RuleTables, build_tables

DATA_DIR = Path(__file__).parent / "data"
ENV_VAR = "KAS_CONFIG"


@dataclass
class Config:
    grammar: Path = DATA_DIR / "default.kag"
    ontology: Path = DATA_DIR / "ontology.json"
    lexicons: list[Path] = field(default_factory=lambda: [
        DATA_DIR / "pronouns.lex", DATA_DIR / "sentiment.lex",
        DATA_DIR / "intensity.lex", DATA_DIR / "emotions.lex",
    ])
    lexico_ontologies: list[Path] = field(default_factory=lambda: [
        DATA_DIR / "roa.tsv", DATA_DIR / "drugform.tsv", DATA_DIR / "sideffect.tsv",
    ])
    index: Path = Path("index.kix")
    range_ceiling: int = 10
    snippet_context: int = 6
    host: str = "127.0.0.1"
    port: int = 8080
    ui_dir: Path | None = None

    @staticmethod
    def load(path: str | Path) -> "Config":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise KasError(f"cannot read config {path}: {e}") from e
        cfg = Config()
        base = Path(path).parent
        for key in ("grammar", "ontology", "index", "ui_dir"):
            if key in obj:
                setattr(cfg, key, base / obj[key])
        for key in ("lexicons", "lexico_ontologies"):
            if key in obj:
                setattr(cfg, key, [base / p for p in obj[key]])
        for key in ("range_ceiling", "snippet_context", "port"):
            if key in obj:
                setattr(cfg, key, int(obj[key]))
        if "host" in obj:
            cfg.host = obj["host"]
        return cfg

    @staticmethod
    def from_env() -> "Config":
        path = os.environ.get(ENV_VAR)
        return Config.load(path) if path else Config()


@dataclass
class Resources:
    grammar: Grammar
    model: KnowledgeModel
    tables: RuleTables


def load_resources(cfg: Config | None = None) -> Resources:
    cfg = cfg or Config()
    for p in (cfg.grammar, cfg.ontology, *cfg.lexicons, *cfg.lexico_ontologies):
        if not Path(p).exists():
            raise KasError(f"missing resource file: {p}")
    grammar = load_grammar(Path(cfg.grammar).read_text(encoding="utf-8"))
    model = load_knowledge(grammar, cfg.ontology, list(cfg.lexicons), list(cfg.lexico_ontologies))
    tables = build_tables(grammar)
    return Resources(grammar=grammar, model=model, tables=tables)
