"""Budget knobs.

Every potentially unbounded computation takes a limit from here. Defaults are
calibrated so the shipped corpus runs comfortably; all are overridable per
call and from the CLI via --budget-* flags.
"""
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Budgets:
    machine_nodes: int = 10_000       # bisimulation classes per section closure
    quotient_elements: int = 2_000_000  # level-quotient enumeration
    table_leaves: int = 1 << 20       # largest d**n image table
    nucleus_elements: int = 50_000
    nucleus_generations: int = 64
    member_words: int = 20_000        # bounded word search for subgroup membership
    word_search_len: int = 12
    sieve_depth: int = 6              # quotient sieve depth for non-membership
    search_rows: int | None = None    # kneading search: raw candidates per run

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


DEFAULT = Budgets()
