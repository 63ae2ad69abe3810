"""
Run configuration: command-line parameters merged with YAML defaults and validated up front
"""
import math
import os
from dataclasses import asdict, dataclass, field
from typing import List, Optional

from dotenv import load_dotenv

from .errors import InvalidParameterError
from .file_utils import load_config
from .logger import get_logger

logger = get_logger(__name__)

SEED_VARIABLE = 'BERGMAN_REFLECT_SEED'

FORMATS = ('csv', 'jsonl')
MAP_KINDS = ('gml2', 'pik', 'power')
SWEEP_METHODS = ('schur', 'grid_power')
GROUP_KINDS = ('gml', 'pair')


def default_seed(config_path: str = "config/verify_config.yml") -> int:
    """Seed from BERGMAN_REFLECT_SEED (a .env file is honored), else the YAML default"""
    load_dotenv()
    value = os.getenv(SEED_VARIABLE)
    if value is not None:
        try:
            return int(value)
        except ValueError:
            raise InvalidParameterError(f"{SEED_VARIABLE}={value!r} is not an integer")
    try:
        return int(load_config(config_path).get('sampling', {}).get('default_seed', 0))
    except FileNotFoundError:
        logger.warning(f"Configuration file not found: {config_path}; using seed 0")
        return 0


def default_samples(config_path: str = "config/verify_config.yml") -> int:
    try:
        return int(load_config(config_path).get('sampling', {}).get('default_samples', 100000))
    except FileNotFoundError:
        return 100000


@dataclass
class RunConfig:
    """Parameters of one command-line run"""

    command: str
    action: Optional[str] = None
    m: int = 4
    ell: Optional[int] = None
    n: int = 2
    k: int = 1
    p: float = 2.0
    p_grid: List[float] = field(default_factory=lambda: [1.25, 1.5, 2.0, 3.0, 4.0])
    delta: float = 0.2
    samples: int = 100000
    seed: int = 0
    output: Optional[str] = None
    format: str = 'csv'
    map_kind: str = 'pik'
    method: str = 'schur'
    swap: bool = False
    group_kind: str = 'gml'
    moment: List[int] = field(default_factory=lambda: [1, 1])
    document: Optional[str] = None
    poly: str = '1 + z1 - 2*z1*z2 + I*z2**3/2 + z1**4'
    z: Optional[List[float]] = None
    w: Optional[List[float]] = None
    points: int = 5

    @property
    def ell_or_m(self) -> int:
        return self.m if self.ell is None else self.ell

    def validate(self) -> 'RunConfig':
        """Check every numeric parameter before any computation

        Raises:
            InvalidParameterError: On the first invalid value
        """
        if self.m < 1:
            raise InvalidParameterError(f"--m must be >= 1, got {self.m}")
        if self.ell_or_m < 1 or self.m % self.ell_or_m:
            raise InvalidParameterError(f"--ell must be a positive divisor of m = {self.m}, got {self.ell}")
        if self.n < 1:
            raise InvalidParameterError(f"--n must be >= 1, got {self.n}")
        if not 0 <= self.k <= 6:
            raise InvalidParameterError(f"--k must lie in [0, 6], got {self.k}")
        for p in [self.p] + list(self.p_grid):
            if not 1.0 < p < math.inf:
                raise InvalidParameterError(f"p must lie in (1, inf), got {p}")
        if not self.delta > 0:
            raise InvalidParameterError(f"--delta must be positive, got {self.delta}")
        if self.points < 1:
            raise InvalidParameterError(f"--points must be >= 1, got {self.points}")
        if self.samples < 2:
            raise InvalidParameterError(f"--samples must be >= 2, got {self.samples}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameterError(f"--seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.format not in FORMATS:
            raise InvalidParameterError(f"--format must be one of {FORMATS}, got {self.format!r}")
        if self.map_kind not in MAP_KINDS:
            raise InvalidParameterError(f"--map must be one of {MAP_KINDS}, got {self.map_kind!r}")
        if self.method not in SWEEP_METHODS:
            raise InvalidParameterError(f"--method must be one of {SWEEP_METHODS}, got {self.method!r}")
        if self.group_kind not in GROUP_KINDS:
            raise InvalidParameterError(f"--group must be one of {GROUP_KINDS}, got {self.group_kind!r}")
        if len(self.moment) != 2 or min(self.moment) < 0:
            raise InvalidParameterError(f"--moment takes two nonnegative integers, got {self.moment}")
        for label, point in (('z', self.z), ('w', self.w)):
            if point is not None:
                if len(point) != 4:
                    raise InvalidParameterError(f"--{label} takes 4 reals (re1 im1 re2 im2), got {len(point)}")
                if point[0] ** 2 + point[1] ** 2 + point[2] ** 2 + point[3] ** 2 >= 1.0:
                    raise InvalidParameterError(f"--{label} must lie strictly inside the unit ball")
        return self

    def to_dict(self) -> dict:
        return asdict(self)
