"""
From one fuzzer crash to a second, unfuzzed bug
===============================================

A parser aborts on the input "doom". Its sibling function has the same
abort, hidden behind a hash check that no fuzzer will solve, and reached
through a macro so a text search for ``abort(`` cannot see it.
"""

from vulnexplore.corpus import compute_coverset, load_corpus, obtain_parent_mutation, obtain_slice
from vulnexplore.fixtures import fixture_dir, load_fixture_tus
from vulnexplore.localize import localize_failure, obtain_dice
from vulnexplore.rank import rank_matches
from vulnexplore.templates import derive_syntactic_template, match_template, render_matcher, render_matches

# the bundled corpus holds two inputs: "doo" runs clean, its child "doom" crashes
tus = load_fixture_tus("motivating")
corpus = load_corpus(fixture_dir("motivating") / "manifest.jsonl")
for entry in corpus:
    print(entry.id, entry.input_path.read_bytes(), "crash" if entry.crash else "ok")

# lines run by the crash but not by its clean parent
crash = corpus.entries["001"]
parent = obtain_parent_mutation(crash, corpus)
dice = obtain_dice(obtain_slice(crash), obtain_slice(parent))
print("dice:", sorted(dice.lines))

# the dice pins the fault; its statement becomes a template
locus = localize_failure(crash, corpus, tus)
template = derive_syntactic_template(tus, locus)
print("template:", render_matcher(template))

# matching works on the typed AST, so the macro alias on line 17 is found too
matches = match_template(tus, template)
print(render_matches(matches))

# functions the corpus already exercised rank low; line 17 was never run
ranked = rank_matches(matches, compute_coverset(corpus))
for m in ranked.high:
    print("high:", m.loc, m.enclosing_function.function)
for m in ranked.low:
    print("low: ", m.loc, m.enclosing_function.function)
