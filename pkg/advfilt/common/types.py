from typing import Any, Dict, Sequence, Union

import numpy as np
import torch as th

TData = Union[np.ndarray, th.Tensor]
TSeed = Union[int, Sequence[int], np.random.SeedSequence]
TConfig = Dict[str, Any]
