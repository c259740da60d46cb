from .barrier import *
from .path_following import *
from .initialization import *
from .rounding import *
from .solvers import *
from .trace import *
