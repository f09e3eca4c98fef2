"""StackExchange question-tagging analytics, prediction baselines, and evaluation."""

__version__ = "0.1.0"

from .corpus import (  # noqa: F401
    CorpusSplit,
    DomainCorpus,
    Post,
    build_corpus,
    load_corpus,
    save_corpus,
    split_corpus,
)
from .ingest import RejectsReport, parse_posts_stream, parse_tag_field, strip_html  # noqa: F401
from .vocab import MetaVocab, build_meta_vocab, is_oov  # noqa: F401
