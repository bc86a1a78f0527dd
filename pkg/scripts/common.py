"""Tiny helper: expose the fields of a config dataclass as command-line flags."""
import argparse
import dataclasses


def parse_config(cls, argv=None):
    ap = argparse.ArgumentParser(description=cls.__doc__)
    for f in dataclasses.fields(cls):
        flag = "--" + f.name.replace("_", "-")
        if isinstance(f.default, tuple):
            ap.add_argument(flag, type=type(f.default[0]), nargs="+", default=list(f.default))
        else:
            ap.add_argument(flag, type=type(f.default), default=f.default)
    return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in vars(ap.parse_args(argv)).items()})
