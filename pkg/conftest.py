"""Root test configuration.

The plotkit subproject directory shares its name with the installed
import package. Importing the real package up front pins it in
sys.modules so collection of plotkit/tests does not manufacture a
namespace placeholder that shadows it.
"""
try:
    import plotkit  # noqa: F401
except ImportError:
    pass
