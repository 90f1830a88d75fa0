"""A small PLONK-style proof system with FRI commitments over Goldilocks."""
