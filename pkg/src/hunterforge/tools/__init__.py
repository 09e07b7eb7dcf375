from hunterforge.tools.types import *
from hunterforge.tools.errors import *
from hunterforge.tools.geometry import *
from hunterforge.tools.linalg import *
from hunterforge.tools.utils import *
