"""Neuroevolution of recurrent networks encoded as DCT coefficient genomes."""

__version__ = "0.1.0"
