"""Robin-Neumann p-Laplacian eigenvalues and torsion: annulus comparison toolkit."""

__version__ = "0.1.0"
