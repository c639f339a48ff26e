from .cli import run, aparser, VERSION, OUTDIR_ENV
from .suite import Check, VerifySuite
