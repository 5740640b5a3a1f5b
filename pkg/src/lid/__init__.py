"""Language identification toolkit.

Character n-gram language identification with five trainable classifier
architectures, word-level code-switching detection, model compression,
and a synthetic benchmark generator for end-to-end verification.
"""

__version__ = "0.1.0"

MODEL_FORMAT_VERSION = 1
CONFIG_SCHEMA_VERSION = 1
