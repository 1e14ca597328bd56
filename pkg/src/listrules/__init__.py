"""Descriptive rule mining over co-occurring entities in wiki listings."""

from .assertions import Assertion
from .corpus import Corpus, Listing, ListingContext, Mention, Page, load_corpus
from .kg import KnowledgeGraph, load_kg
from .mining import Consequent, ContextPattern, MiningConfig, Rule, mine_rules, select_rules
from .tagger import TagModel

__all__ = [
    "Assertion", "Consequent", "ContextPattern", "Corpus", "KnowledgeGraph", "Listing",
    "ListingContext", "Mention", "MiningConfig", "Page", "Rule", "TagModel", "load_corpus",
    "load_kg", "mine_rules", "select_rules",
]
__version__ = "0.1.0"
