"""minimt: a desk-scale machine translation workbench.

Subpackages/modules: corpus (preprocessing), simplex (simple-sentence
extraction), lm (Kneser-Ney n-gram LM), smt (phrase-based SMT), nmt
(seq2seq NMT), metrics (BLEU/TER/statistics), cli (pipeline commands).
"""

__version__ = "0.1.0"
