"""Monte Carlo laboratory for tail asymptotics of stopped martingales with bounded jumps."""
from .models import (ModelKind, ModelSpec, PathRecord, TerminalBatch, TerminalSample, analytic_oracle,
                     compensated_poisson_upper, generate_path, jump_diffusion_two_sided, random_walk_atoms_upper,
                     sample_terminal, sample_terminals, stopped_brownian_two_sided, stopped_brownian_upper)
from .rng import Seed, Stream, derive_stream

__version__ = "0.1.0"
