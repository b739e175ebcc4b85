"""nesyflow: natural-language task descriptions to executable neuro-symbolic
programs, with constraint-consistent ILP inference over model scores."""

__version__ = "0.1.0"
