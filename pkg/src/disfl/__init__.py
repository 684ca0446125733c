"""Word-by-word incremental disfluency detection toolkit.

Subpackages cover the 27-label tag scheme and repair-structure resolution
(:mod:`disfl.tags`), annotated corpus I/O and vocabularies
(:mod:`disfl.corpus`), a seeded disfluent-dialogue generator
(:mod:`disfl.generator`), the multi-task recurrent tagger
(:mod:`disfl.model`), its SGD trainer (:mod:`disfl.training`),
micro-F1 evaluation (:mod:`disfl.metrics`), and the command line
(:mod:`disfl.cli`).
"""

__version__ = "0.1.0"
