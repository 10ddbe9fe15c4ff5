import logging
import sys

logging.basicConfig(
    level=logging.INFO,
    stream=sys.stdout,
    format="%(asctime)s - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
)

# Worker threads of the sweep go through asyncio and anyio.
for _name in ("asyncio", "anyio", "numexpr"):
    logging.getLogger(_name).setLevel(logging.ERROR)


logger = logging.getLogger("chbesov")


def set_debug(enabled: bool = True) -> None:
    """Let solver diagnostics and table builds through to the log."""
    logger.setLevel(logging.DEBUG if enabled else logging.NOTSET)
