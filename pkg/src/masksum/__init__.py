"""Over-generate exact-length summary variants, then select admissible ones.

The generator is a masked denoising sequence model decoded with
position-aware beam search, which fills summary slots in confidence order
and guarantees the requested token count. Selectors pick from the generated
set: a corruption-trained admissibility classifier, and closed-form scorers
that trade log-likelihood against summary length.
"""

__version__ = "0.1.0"
